use levyprop_core::geometry::{cv_phase_map, great_circle, layer_cv, pca, propagate, CvMapConfig};
use levyprop_core::meanfield::{MeanFieldMap, Transition};
use levyprop_core::multifractal::{dq_spectrum, DqConfig, DqEstimate};
use levyprop_core::network::forward_streaming;
use levyprop_core::optimize::bisect;
use levyprop_core::phase::{phase_diagram, PhaseConfig};
use levyprop_core::rng::{child_seed, indexed_seed};
use levyprop_core::spectra::SpectralModel;
use levyprop_core::stable::{
    fit, fit_gaussian, normalized_scale, sample, StableParams, StableTable,
};
use levyprop_core::{
    activity_moment, calibrated_input, Activation, Executor, Network, NetworkSpec,
};
use serde::Serialize;

use super::args::{
    Command, FitArgs, FractalArgs, ManifoldArgs, MeanfieldArgs, PhaseArgs, SampleArgs, SampleKind,
    Scale, SpectrumArgs, TransitionArgs,
};
use super::Run;
use crate::eigen::FaerEigen;
use crate::error::{Error, Result};
use crate::io::{export_network, read_weight_values, sidecar_path, write_weight_values, Shape};
use crate::spectrum::{
    angular_uniformity, radial_fractions, realization_spectrum, spectral_radius, EnsembleConfig,
};
use crate::svg::{Heatmap, Plot, Series};
use crate::table::{Cell, Table};

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_ITER: usize = 100_000;

pub fn dispatch(command: &Command, run: &mut Run) -> Result<()> {
    match command {
        Command::Fit(a) => cmd_fit(a, run),
        Command::Sample(a) => cmd_sample(a, run),
        Command::Meanfield(a) => cmd_meanfield(a, run),
        Command::TransitionLine(a) => cmd_transition_line(a, run),
        Command::Spectrum(a) => cmd_spectrum(a, run),
        Command::PhaseDiagram(a) => cmd_phase_diagram(a, run),
        Command::Manifold(a) => cmd_manifold(a, run),
        Command::Fractal(a) => cmd_fractal(a, run),
    }
}

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// `(D_w, D_w^(1/alpha))` from whichever form was given.
fn resolve_scale(alpha: f64, s: &Scale) -> Result<(f64, f64)> {
    match (s.dw, s.dw_root) {
        (Some(dw), None) if dw > 0.0 => Ok((dw, dw.powf(1.0 / alpha))),
        (None, Some(r)) if r > 0.0 => Ok((r.powf(alpha), r)),
        (None, None) => Err(config("one of --dw or --dw-root is required")),
        _ => Err(config("the weight scale must be positive")),
    }
}

fn fixed_point(alpha: f64, dw: f64, db: f64) -> Result<f64> {
    let map = MeanFieldMap::new(alpha, Activation::Tanh)?;
    Ok(map
        .fixed_point(dw, db, 1.0, FIXED_POINT_TOL, FIXED_POINT_ITER)?
        .qstar)
}

/// Transition line for overlays; failed alphas are skipped.
fn transition_overlay<E: Executor>(alphas: &[f64], db: f64, threshold: f64, pool: &E) -> Series {
    let rows: Vec<Option<Transition>> = pool.map(alphas.len(), |i| {
        MeanFieldMap::new(alphas[i], Activation::Tanh)
            .and_then(|m| m.ordered_transition(db, threshold))
            .ok()
    });
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .flatten()
        .map(|t| (t.dw_bar.powf(1.0 / t.alpha), t.alpha))
        .collect();
    Series::line(
        "transition",
        pts.iter().map(|p| p.0).collect(),
        pts.iter().map(|p| p.1).collect(),
    )
}

#[derive(Debug, Serialize)]
struct FitReport {
    file: String,
    rows: usize,
    cols: usize,
    n: usize,
    stable: levyprop_core::stable::FitResult,
    gaussian: levyprop_core::stable::FitResult,
    /// Stable over Gaussian KS p-value.
    ks_pvalue_ratio: f64,
    /// `2 sqrt(rows cols) sigma^alpha` of the stable fit.
    normalized_dw: f64,
    normalized_dw_gaussian: f64,
}

fn cmd_fit(a: &FitArgs, run: &mut Run) -> Result<()> {
    let (shape, values) = read_weight_values(&a.weights)?;
    let stable = fit(&values)?;
    let gaussian = fit_gaussian(&values)?;
    let p = stable.params;
    let report = FitReport {
        file: a.weights.display().to_string(),
        rows: shape.rows,
        cols: shape.cols,
        n: values.len(),
        stable,
        gaussian,
        ks_pvalue_ratio: stable.ks_pvalue / gaussian.ks_pvalue,
        normalized_dw: normalized_scale(p.sigma, p.alpha, shape.rows, shape.cols)?,
        normalized_dw_gaussian: normalized_scale(
            gaussian.params.sigma,
            2.0,
            shape.rows,
            shape.cols,
        )?,
    };
    run.json("fit_report", &report)?;
    run.note("alpha", p.alpha);
    run.note("normalized_dw", report.normalized_dw);

    if run.wants(super::Format::Svg) {
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let q = |f: f64| sorted[((sorted.len() - 1) as f64 * f) as usize];
        let (lo, hi) = (q(0.005), q(0.995));
        let bins = 80;
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &v in &sorted {
            if v >= lo && v < hi {
                counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
            }
        }
        let centers: Vec<f64> = (0..bins).map(|k| lo + (k as f64 + 0.5) * width).collect();
        let hist: Vec<f64> = counts
            .iter()
            .map(|&c| c as f64 / (values.len() as f64 * width))
            .collect();
        let st = StableTable::new(p)?;
        let gt = StableTable::new(gaussian.params)?;
        let plot = Plot {
            log_y: true,
            ..Plot::new("weight distribution", "w", "density")
        }
        .series(Series::points("histogram", centers.clone(), hist))
        .series(Series::line(
            "stable fit",
            centers.clone(),
            centers.iter().map(|&x| st.pdf(x)).collect(),
        ))
        .series(Series::line(
            "gaussian fit",
            centers.clone(),
            centers.iter().map(|&x| gt.pdf(x)).collect(),
        ));
        run.svg("fit", plot.render())?;
    }
    Ok(())
}

fn cmd_sample(a: &SampleArgs, run: &mut Run) -> Result<()> {
    match a.kind {
        SampleKind::Matrix => {
            if a.rows == 0 || a.cols == 0 {
                return Err(config("--rows and --cols must be positive"));
            }
            let params = StableParams::new(a.alpha, a.beta, a.sigma, a.mu)?;
            let values = sample(params, a.rows * a.cols, child_seed(run.seed, "sample"))?;
            let path = run.path("samples.f32");
            write_weight_values(
                &path,
                Shape {
                    rows: a.rows,
                    cols: a.cols,
                },
                &values,
            )?;
            run.seeds("sample");
            run.record("samples.f32".into());
            run.record(
                sidecar_path(std::path::Path::new("samples.f32"))
                    .display()
                    .to_string(),
            );
        }
        SampleKind::Network => {
            let spec = NetworkSpec::new(a.alpha, a.dw, a.db, a.width, a.depth)?;
            let net = Network::init(spec, run.seed)?;
            export_network(&run.path("network"), &net)?;
            run.seeds("weight[l, i] (row i of layer l)");
            run.seeds("bias[l]");
            run.record("network/network.json".into());
        }
    }
    Ok(())
}

/// Median of `|Z|` for `Z ~ S_alpha(1)`.
fn abs_median(alpha: f64) -> Result<f64> {
    let t = StableTable::new(StableParams::symmetric(alpha, 1.0)?)?;
    Ok(bisect(|x| t.cdf(x) - 0.75, 0.0, 50.0, 1e-12)?)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn cmd_meanfield(a: &MeanfieldArgs, run: &mut Run) -> Result<()> {
    let (dw, _) = resolve_scale(a.alpha, &a.scale)?;
    if a.layers == 0 || !(a.q0 >= 0.0) {
        return Err(config("need --layers >= 1 and --q0 >= 0"));
    }
    let map = MeanFieldMap::new(a.alpha, Activation::Tanh)?;
    let mut q = vec![a.q0, dw * a.q0 + a.db];
    for l in 2..=a.layers {
        q.push(map.q_map(q[l - 1], dw, a.db)?);
    }
    let fp = map.fixed_point(dw, a.db, a.q0, a.tol, a.max_iter)?;
    run.note("qstar", fp.qstar);
    run.note("converged", fp.converged);
    run.note("iterations", fp.iterations());

    let mut header = vec!["layer", "q"];
    let mut sim: Option<(Vec<f64>, Vec<f64>)> = None;
    if a.simulate {
        if a.width == 0 || a.realizations == 0 {
            return Err(config("--width and --realizations must be positive"));
        }
        header.extend(["q_moment", "q_median"]);
        let spec = NetworkSpec::new(a.alpha, dw, a.db, a.width, a.layers)?;
        let m_alpha = abs_median(a.alpha)?;
        let per_run: Vec<Result<Vec<(f64, f64)>>> = run.pool.map(a.realizations, |r| {
            let seed = indexed_seed(run.seed, "meanfield", &[r as u64]);
            let x0 = calibrated_input(a.width, a.alpha, a.q0, indexed_seed(seed, "input", &[]));
            let mut out = Vec::with_capacity(a.layers);
            forward_streaming(&spec, seed, &x0, |_, h| {
                let med = median(h.iter().map(|v| v.abs()).collect());
                out.push((
                    activity_moment(h, a.alpha),
                    2.0 * (med / m_alpha).powf(a.alpha),
                ));
            })?;
            Ok(out)
        });
        let mut ok = Vec::new();
        for (r, res) in per_run.into_iter().enumerate() {
            match res {
                Ok(v) => ok.push(v),
                Err(e) => run.fail(format!("realization {r}"), &e),
            }
        }
        run.check_partial(a.realizations)?;
        run.seeds("meanfield[r]; input = indexed(meanfield[r], input, [])");
        let avg = |k: usize, pick: fn(&(f64, f64)) -> f64| {
            ok.iter().map(|v| pick(&v[k])).sum::<f64>() / ok.len() as f64
        };
        sim = Some((
            (0..a.layers).map(|k| avg(k, |p| p.0)).collect(),
            (0..a.layers).map(|k| avg(k, |p| p.1)).collect(),
        ));
    }
    let mut t = Table::new("meanfield", &header);
    for (l, &ql) in q.iter().enumerate() {
        let mut row: Vec<Cell> = vec![l.into(), ql.into()];
        if let Some((m, d)) = &sim {
            if l == 0 {
                row.extend([f64::NAN.into(), f64::NAN.into()]);
            } else {
                row.extend([m[l - 1].into(), d[l - 1].into()]);
            }
        }
        t.push(row);
    }
    run.table(&t)?;
    let layers: Vec<f64> = (0..q.len()).map(|l| l as f64).collect();
    let mut plot = Plot::new("fluctuation map", "layer", "q").series(Series::line(
        "mean field",
        layers.clone(),
        q.clone(),
    ));
    if let Some((m, d)) = sim {
        plot = plot
            .series(Series::points("sample moment", layers[1..].to_vec(), m))
            .series(Series::points("median estimate", layers[1..].to_vec(), d));
    }
    run.svg("meanfield", plot.render())
}

fn transition_table(rows: &[Transition]) -> Table {
    let mut t = Table::new(
        "transition_line",
        &["alpha", "Dw_bar", "qstar", "iterations"],
    );
    for r in rows {
        t.push(vec![
            r.alpha.into(),
            r.dw_bar.into(),
            r.qstar.into(),
            r.iterations.into(),
        ]);
    }
    t
}

fn cmd_transition_line(a: &TransitionArgs, run: &mut Run) -> Result<()> {
    if !(a.threshold > 0.0) {
        return Err(config("--threshold must be positive"));
    }
    let alphas = &a.alphas.0;
    let res = run.pool.map(alphas.len(), |i| {
        MeanFieldMap::new(alphas[i], Activation::Tanh)
            .and_then(|m| m.ordered_transition(a.db, a.threshold))
    });
    let mut rows = Vec::new();
    for (alpha, r) in alphas.iter().zip(res) {
        match r {
            Ok(t) => rows.push(t),
            Err(e) => run.fail(format!("alpha={alpha}"), &e),
        }
    }
    run.check_partial(alphas.len())?;
    run.table(&transition_table(&rows))?;
    let xs: Vec<f64> = rows.iter().map(|r| r.alpha).collect();
    let plot = Plot::new("ordered transition", "alpha", "weight scale")
        .series(Series::line(
            "Dw_bar",
            xs.clone(),
            rows.iter().map(|r| r.dw_bar).collect(),
        ))
        .series(Series::line(
            "Dw_bar^(1/alpha)",
            xs,
            rows.iter().map(|r| r.dw_bar.powf(1.0 / r.alpha)).collect(),
        ));
    run.svg("transition_line", plot.render())
}

/// Linear interpolation of the enclosed mass, with `M(0) = 0`.
fn mass_at(radii: &[f64], mass: &[f64], r: f64) -> f64 {
    if r <= radii[0] {
        return mass[0] * r * r / (radii[0] * radii[0]);
    }
    match radii.iter().position(|&x| x >= r) {
        None => mass[mass.len() - 1],
        Some(k) => {
            let t = (r - radii[k - 1]) / (radii[k] - radii[k - 1]);
            mass[k - 1] + t * (mass[k] - mass[k - 1])
        }
    }
}

fn cmd_spectrum(a: &SpectrumArgs, run: &mut Run) -> Result<()> {
    let (dw, dw_root) = resolve_scale(a.alpha, &a.scale)?;
    if a.width < 2 || a.realizations == 0 || a.bins == 0 || a.radii < 2 {
        return Err(config(
            "need --width >= 2, --radii >= 2, and positive --realizations and --bins",
        ));
    }
    let qstar = fixed_point(a.alpha, dw, a.db)?;
    let model = SpectralModel::new(
        a.alpha,
        dw,
        qstar,
        a.n_mc,
        child_seed(run.seed, "spectral-model"),
    )?;
    let radii = model.default_radii(a.r_min, a.radii);
    let profile = model.profile(&radii)?;
    run.seeds("spectral-model");
    run.note("dw", dw);
    run.note("dw_root", dw_root);
    run.note("qstar", qstar);
    run.note("edge", model.edge());
    run.note("total_mass", profile.total_mass);
    run.note("characteristic_radius", model.characteristic_radius(0.99)?);

    let mut t = Table::new("density", &["radius", "rho", "ystar"]);
    for ((&r, &rho), &y) in radii.iter().zip(&profile.density).zip(&profile.ystar) {
        t.push(vec![r.into(), rho.into(), y.into()]);
    }
    run.table(&t)?;

    let config = EnsembleConfig {
        spec: NetworkSpec::new(a.alpha, dw, a.db, a.width, 1)?,
        layer: a.layer,
        form: a.form.into(),
        realizations: a.realizations,
        q0: qstar,
        seed: run.seed,
    };
    run.seeds("spectrum[r]; input = indexed(spectrum[r], input, [])");
    let res = run
        .pool
        .map(a.realizations, |r| realization_spectrum(&config, r));
    let mut eigs = Vec::new();
    let mut radius_sum = 0.0;
    let mut ok = 0;
    for (r, e) in res.into_iter().enumerate() {
        match e {
            Ok(v) => {
                radius_sum += spectral_radius(&v);
                ok += 1;
                eigs.extend(v);
            }
            Err(e) => run.fail(format!("realization {r}"), &e),
        }
    }
    run.check_partial(a.realizations)?;
    run.note("mean_spectral_radius", radius_sum / ok as f64);
    run.note("angular_p_value", angular_uniformity(&eigs, 16).1);

    let mut t = Table::new("empirical", &["re", "im"]);
    for z in &eigs {
        t.push(vec![z.re.into(), z.im.into()]);
    }
    run.table(&t)?;

    let r_hi = spectral_radius(&eigs).max(model.characteristic_radius(0.99)?);
    let edges: Vec<f64> = (0..=a.bins)
        .map(|k| r_hi * k as f64 / a.bins as f64)
        .collect();
    let frac = radial_fractions(&eigs, &edges);
    let mut t = Table::new("radial", &["r_lo", "r_hi", "empirical", "theory"]);
    let mut centers = Vec::new();
    let mut emp_rho = Vec::new();
    for k in 0..a.bins {
        let theory =
            mass_at(&radii, &profile.mass, edges[k + 1]) - mass_at(&radii, &profile.mass, edges[k]);
        t.push(vec![
            edges[k].into(),
            edges[k + 1].into(),
            frac[k].into(),
            theory.into(),
        ]);
        let area = std::f64::consts::PI * (edges[k + 1].powi(2) - edges[k].powi(2));
        centers.push(0.5 * (edges[k] + edges[k + 1]));
        emp_rho.push(frac[k] / area);
    }
    run.table(&t)?;

    let shown = eigs.len().min(20_000);
    let scatter = Plot::new("Jacobian eigenvalues", "Re", "Im").series(Series::points(
        "eigenvalues",
        eigs[..shown].iter().map(|z| z.re).collect(),
        eigs[..shown].iter().map(|z| z.im).collect(),
    ));
    run.svg("spectrum_scatter", scatter.render())?;
    let density = Plot {
        log_y: true,
        ..Plot::new("radial density", "|z|", "rho")
    }
    .series(Series::line(
        "theory",
        radii.clone(),
        profile.density.clone(),
    ))
    .series(Series::points("empirical", centers, emp_rho));
    run.svg("spectrum_density", density.render())
}

fn cmd_phase_diagram(a: &PhaseArgs, run: &mut Run) -> Result<()> {
    if a.l_max == 0 || a.contours.iter().any(|l| l % 2 == 0) {
        return Err(config("--l-max must be positive and --contours odd"));
    }
    let config = PhaseConfig {
        alphas: a.alphas.0.clone(),
        dw_roots: a.dw_roots.0.clone(),
        l_max: a.l_max,
        l_contours: a.contours.clone(),
        db: a.db,
        q0: 1.0,
        threshold: a.threshold,
        n_mc: a.n_mc,
        n_radii: a.radii,
        r_min: a.r_min,
        seed: run.seed,
    };
    let grid = phase_diagram(&config, &run.pool)?;
    run.seeds("phase-row[i]: spectral samples shared along each alpha row, transition included");

    let mut header: Vec<String> = ["alpha", "dw_root", "Dw_bar"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=a.l_max).map(|l| format!("ratio_L{l}")));
    header.push("max_L".into());
    let mut t = Table::with_header("phase_grid", header);
    let nj = config.dw_roots.len();
    let mut heat = vec![vec![f64::NAN; nj]; config.alphas.len()];
    for (i, &alpha) in config.alphas.iter().enumerate() {
        for (j, &dw_root) in config.dw_roots.iter().enumerate() {
            match grid.cell(i, j) {
                Ok(c) => {
                    let mut row: Vec<Cell> = vec![alpha.into(), dw_root.into(), c.dw_bar.into()];
                    row.extend(c.ratio.iter().map(|&r| Cell::from(r)));
                    row.push(c.max_l.into());
                    t.push(row);
                    heat[i][j] = f64::from(c.max_l);
                }
                Err(e) => {
                    let mut row: Vec<Cell> = vec![alpha.into(), dw_root.into()];
                    row.extend((0..=a.l_max).map(|_| Cell::from(f64::NAN)));
                    row.push("".into());
                    t.push(row);
                    run.fail(
                        format!("cell ({i}, {j}) alpha={alpha} dw_root={dw_root}"),
                        e,
                    );
                }
            }
        }
    }
    run.check_partial(config.alphas.len() * nj)?;
    run.table(&t)?;

    let transitions: Vec<Transition> = grid
        .rows
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .map(|r| r.transition)
        .collect();
    run.table(&transition_table(&transitions))?;

    let mut c = Table::new("phase_contours", &["L", "alpha", "dw_root"]);
    for contour in &grid.contours {
        for &(alpha, x) in &contour.points {
            c.push(vec![contour.l.into(), alpha.into(), x.into()]);
        }
    }
    run.table(&c)?;

    let mut overlays = vec![Series::line(
        "transition",
        transitions
            .iter()
            .map(|t| t.dw_bar.powf(1.0 / t.alpha))
            .collect(),
        transitions.iter().map(|t| t.alpha).collect(),
    )];
    for contour in &grid.contours {
        overlays.push(Series::points(
            &format!("f2 L={}", contour.l),
            contour.points.iter().map(|p| p.1).collect(),
            contour.points.iter().map(|p| p.0).collect(),
        ));
    }
    let h = Heatmap {
        title: "maximal depth with ratio above 1".into(),
        xlabel: "Dw^(1/alpha)".into(),
        ylabel: "alpha".into(),
        colorbar: "max L".into(),
        xs: config.dw_roots.clone(),
        ys: config.alphas.clone(),
        values: heat,
        overlays,
    };
    run.svg("phase_diagram", h.render())
}

fn cmd_manifold(a: &ManifoldArgs, run: &mut Run) -> Result<()> {
    if a.map {
        return manifold_map(a, run);
    }
    let (dw, _) = resolve_scale(a.alpha, &a.scale)?;
    if a.components == 0 {
        return Err(config("--components must be positive"));
    }
    let spec = NetworkSpec::new(a.alpha, dw, a.db, a.width, a.depth)?;
    let seed = child_seed(run.seed, "manifold");
    let net = Network::init(spec, seed)?;
    let circle = great_circle(
        a.width,
        a.alpha,
        a.q0,
        a.points,
        indexed_seed(seed, "circle", &[]),
    )?;
    let cloud = propagate(&net, &circle)?;
    run.seeds("manifold (network); circle = indexed(manifold, circle, [])");
    let k = a.components;

    let mut header: Vec<String> = vec!["theta".into(), "layer".into()];
    header.extend((1..=k).map(|c| format!("coord{c}")));
    let mut points = Table::with_header("manifold_cloud", header);
    let mut vh: Vec<String> = vec!["layer".into(), "total_variance".into()];
    vh.extend((1..=k).map(|c| format!("var{c}")));
    vh.push("top_fraction".into());
    let mut variances = Table::with_header("manifold_variances", vh);
    let mut fractions = Vec::new();
    let mut last = None;
    for (l, layer) in cloud.layers.iter().enumerate() {
        let p = pca(layer, k)?;
        for (theta, coords) in cloud.thetas.iter().zip(&p.coords) {
            let mut row: Vec<Cell> = vec![(*theta).into(), l.into()];
            row.extend(coords.iter().map(|&c| Cell::from(c)));
            points.push(row);
        }
        let top: f64 = p.variances.iter().take(k).sum();
        let frac = if p.total_variance > 0.0 {
            top / p.total_variance
        } else {
            f64::NAN
        };
        let mut row: Vec<Cell> = vec![l.into(), p.total_variance.into()];
        row.extend(p.variances.iter().take(k).map(|&v| Cell::from(v)));
        row.push(frac.into());
        variances.push(row);
        fractions.push(frac);
        last = Some(p);
    }
    run.table(&points)?;
    run.table(&variances)?;

    let cvs = layer_cv(&cloud)?;
    let mut t = Table::new(
        "manifold_cv",
        &["layer", "cv", "mean_distance", "collapsed"],
    );
    for (l, c) in cvs.iter().enumerate() {
        t.push(vec![
            l.into(),
            c.cv.into(),
            c.mean_distance.into(),
            usize::from(c.collapsed).into(),
        ]);
    }
    run.table(&t)?;
    run.note("final_cv", cvs[cvs.len() - 1].cv);

    let layers: Vec<f64> = (0..cvs.len()).map(|l| l as f64).collect();
    let plot = Plot::new("manifold statistics", "layer", "value")
        .series(Series::line(
            "pairwise cv",
            layers.clone(),
            cvs.iter().map(|c| c.cv).collect(),
        ))
        .series(Series::line("top-k variance fraction", layers, fractions));
    run.svg("manifold_stats", plot.render())?;
    if let Some(p) = last {
        let proj = Plot::new("final layer, leading components", "PC1", "PC2").series(Series::line(
            "manifold",
            p.coords.iter().map(|c| c[0]).collect(),
            p.coords
                .iter()
                .map(|c| if k > 1 { c[1] } else { 0.0 })
                .collect(),
        ));
        run.svg("manifold_projection", proj.render())?;
    }
    Ok(())
}

fn manifold_map(a: &ManifoldArgs, run: &mut Run) -> Result<()> {
    let config = CvMapConfig {
        alphas: a.alphas.0.clone(),
        dw_roots: a.dw_roots.0.clone(),
        db: a.db,
        width: a.width,
        depth: a.depth,
        layers: a.layers.clone(),
        ensembles: a.ensembles,
        n_points: a.points,
        q0: a.q0,
        seed: run.seed,
    };
    let map = cv_phase_map(&config, &run.pool)?;
    run.seeds("cv[i, j, e] (network of ensemble member e in cell (i, j)); circle = indexed(cv[i, j, e], circle, [])");
    let nj = config.dw_roots.len();
    for (i, &alpha) in config.alphas.iter().enumerate() {
        for (j, &dw_root) in config.dw_roots.iter().enumerate() {
            if let Err(e) = map.cell(i, j) {
                run.fail(
                    format!("cell ({i}, {j}) alpha={alpha} dw_root={dw_root}"),
                    e,
                );
            }
        }
    }
    run.check_partial(config.alphas.len() * nj)?;
    let overlay = transition_overlay(&config.alphas, a.db, 0.01, &run.pool);
    for (k, &layer) in config.layers.iter().enumerate() {
        let name = format!("cv_map_L{layer:02}");
        let mut t = Table::new(&name, &["alpha", "dw_root", "cv_mean", "cv_std"]);
        let mut heat = vec![vec![f64::NAN; nj]; config.alphas.len()];
        for (i, &alpha) in config.alphas.iter().enumerate() {
            for (j, &dw_root) in config.dw_roots.iter().enumerate() {
                let (m, s) = match map.cell(i, j) {
                    Ok(c) => (c.cv_mean[k], c.cv_std[k]),
                    Err(_) => (f64::NAN, f64::NAN),
                };
                heat[i][j] = m;
                t.push(vec![alpha.into(), dw_root.into(), m.into(), s.into()]);
            }
        }
        run.table(&t)?;
        let h = Heatmap {
            title: format!("pairwise-distance cv, layer {layer}"),
            xlabel: "Dw^(1/alpha)".into(),
            ylabel: "alpha".into(),
            colorbar: "cv".into(),
            xs: config.dw_roots.clone(),
            ys: config.alphas.clone(),
            values: heat,
            overlays: vec![overlay.clone()],
        };
        run.svg(&name, h.render())?;
    }
    Ok(())
}

fn dq_table(name: &str, est: &[DqEstimate]) -> Table {
    let mut t = Table::new(name, &["q", "Dq_mean", "Dq_std", "fit_r2"]);
    for d in est {
        t.push(vec![
            d.q.into(),
            d.dq_mean.into(),
            d.dq_std.into(),
            d.fit_r2.into(),
        ]);
    }
    t
}

fn cmd_fractal(a: &FractalArgs, run: &mut Run) -> Result<()> {
    let (dw, _) = resolve_scale(a.alpha, &a.scale)?;
    let annulus = match a.annulus.as_deref() {
        None => None,
        Some([lo, hi]) if lo <= hi => Some((*lo, *hi)),
        Some(_) => return Err(config("--annulus takes lo,hi with lo <= hi")),
    };
    let mut config = DqConfig::new(NetworkSpec::new(a.alpha, dw, a.db, 1, 1)?);
    config.layer = a.layer;
    config.form = a.form.into();
    config.q_grid = a.q_grid.0.clone();
    config.sizes = a.sizes.clone();
    config.realizations = a.realizations;
    config.seed = run.seed;
    config.annulus = annulus;
    let curve = dq_spectrum(&config, &FaerEigen, &run.pool)?;
    run.seeds("dq[s, r] (size index s, realization r); input = indexed(dq[s, r], input, [])");
    for (q, e) in &curve.rejected {
        run.fail(format!("q={q}"), e);
    }
    run.check_partial(config.q_grid.len())?;
    let est = curve.estimates;
    run.table(&dq_table("dq", &est))?;
    let spread = est
        .iter()
        .map(|d| d.dq_mean)
        .fold(f64::NEG_INFINITY, f64::max)
        - est.iter().map(|d| d.dq_mean).fold(f64::INFINITY, f64::min);
    run.note("dq_spread", spread);
    let plot = Plot {
        y_range: Some((-0.2, 1.2)),
        ..Plot::new("fractal dimensions", "q", "D_q")
    }
    .series(
        Series::points(
            &format!("alpha={}", a.alpha),
            est.iter().map(|d| d.q).collect(),
            est.iter().map(|d| d.dq_mean).collect(),
        )
        .with_errors(est.iter().map(|d| d.dq_std).collect()),
    );
    run.svg("dq", plot.render())
}
