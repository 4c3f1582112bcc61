use std::time::Instant;

use gpa_core::analysis::{accuracy_bound, kernel_error_sup};
use gpa_core::order::{
    chebyshev_order, chernoff_order_exhaustive, epsilon_from_delta, order_approx, poisson_tail,
    yang_order,
};
use gpa_core::{
    bilateral_exact, estimate_order, FilterParams, GpaEngine, Image, RangeSpec, SpatialKernel,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::args::{
    BenchArgs, CompareArgs, FilterArgs, KernelErrorArgs, OrderArgs, ReferenceArgs, Spatial,
    SpatialArgs,
};
use crate::report::{BenchRow, Bounds, Errors, OrderReport, Params, Report};
use crate::CliError;

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn spatial_params(p: &mut Params, args: &SpatialArgs, kernel: &SpatialKernel) {
    p.spatial = Some(args.spatial);
    match args.spatial {
        Spatial::Gaussian => p.sigma_s = args.sigma_s,
        Spatial::Box => p.window = args.window,
    }
    p.w0 = Some(kernel.w0());
}

fn image_params(p: &mut Params, img: &Image) {
    p.width = Some(img.width());
    p.height = Some(img.height());
}

/// Tail bound on the kernel error at order `n` and the pixel bound it implies.
fn order_bounds(n: usize, sigma_r: f64, w0: f64, half_range: f64) -> Bounds {
    let kernel_bound = poisson_tail(n, (half_range / sigma_r).powi(2));
    Bounds {
        kernel_bound: Some(kernel_bound),
        accuracy_bound: accuracy_bound(kernel_bound, w0, half_range).ok(),
        ..Bounds::default()
    }
}

struct GpaRun {
    out: Image,
    order: OrderReport,
    filterings: usize,
    bounds: Bounds,
    ms: f64,
}

fn run_gpa(
    img: &Image,
    kernel: &SpatialKernel,
    sigma_r: f64,
    delta: Option<f64>,
    order: Option<usize>,
    allow_small: bool,
    range: RangeSpec,
) -> Result<GpaRun, CliError> {
    let mut params = match (delta, order) {
        (Some(d), None) => FilterParams::accuracy(sigma_r, d),
        (None, Some(n)) => FilterParams::fixed(sigma_r, n),
        _ => return Err(CliError::Usage("exactly one of --delta and --order is required".into())),
    }
    .with_range(range);
    if allow_small {
        params = params.allow_small_sigma_r();
    }
    let (n, est) = params.resolve(kernel)?;
    let mut engine = GpaEngine::new(kernel, img.width(), img.height())?;
    let start = Instant::now();
    let out = engine.run(img, sigma_r, n, range)?;
    let ms = elapsed_ms(start);
    Ok(GpaRun {
        out,
        order: est.as_ref().map_or_else(|| OrderReport::explicit(n), OrderReport::from),
        filterings: engine.filterings(),
        bounds: order_bounds(n, sigma_r, kernel.w0(), range.half_range),
        ms,
    })
}

pub fn filter(a: &FilterArgs) -> Result<Report, CliError> {
    let kernel = a.spatial.kernel()?;
    let range = a.range.spec()?;
    let img = Image::load(&a.input)?;
    let run = run_gpa(&img, &kernel, a.sigma_r, a.delta, a.order, a.allow_small_sigma_r, range)?;
    run.out.save(&a.output)?;

    let mut p = Params {
        command: "filter".into(),
        input: Some(a.input.clone()),
        output: Some(a.output.clone()),
        sigma_r: Some(a.sigma_r),
        delta: a.delta,
        order: a.order,
        half_range: Some(range.half_range),
        center: Some(range.center),
        allow_small_sigma_r: a.allow_small_sigma_r,
        ..Params::default()
    };
    spatial_params(&mut p, &a.spatial, &kernel);
    image_params(&mut p, &img);
    let mut r = Report::new(p);
    r.order = Some(run.order);
    r.spatial_filterings = Some(run.filterings);
    r.bounds = Some(run.bounds);
    r.runtime_ms.insert("gpa".into(), run.ms);
    Ok(r)
}

pub fn reference(a: &ReferenceArgs) -> Result<Report, CliError> {
    let kernel = a.spatial.kernel()?;
    let img = Image::load(&a.input)?;
    let start = Instant::now();
    let out = bilateral_exact(&img, &kernel, a.sigma_r)?;
    let ms = elapsed_ms(start);
    out.save(&a.output)?;

    let mut p = Params {
        command: "reference".into(),
        input: Some(a.input.clone()),
        output: Some(a.output.clone()),
        sigma_r: Some(a.sigma_r),
        ..Params::default()
    };
    spatial_params(&mut p, &a.spatial, &kernel);
    image_params(&mut p, &img);
    let mut r = Report::new(p);
    r.runtime_ms.insert("reference".into(), ms);
    Ok(r)
}

pub fn order(a: &OrderArgs) -> Result<Report, CliError> {
    let range = a.range.spec()?;
    let t = range.half_range;
    let mut p = Params {
        command: "order".into(),
        sigma_r: Some(a.sigma_r),
        half_range: Some(t),
        ..Params::default()
    };
    let mut methods = Vec::new();
    let epsilon = match (a.epsilon, a.delta) {
        (Some(eps), None) => eps,
        (None, Some(delta)) => {
            let kernel = a.spatial.kernel()?;
            spatial_params(&mut p, &a.spatial, &kernel);
            p.delta = Some(delta);
            methods.push(order_approx(a.sigma_r, delta, kernel.w0(), t)?);
            methods.push(yang_order(a.sigma_r, delta)?);
            epsilon_from_delta(delta, kernel.w0(), t)?
        }
        _ => return Err(CliError::Usage("exactly one of --epsilon and --delta is required".into())),
    };
    p.epsilon = Some(epsilon);

    let lambda = (t / a.sigma_r).powi(2);
    let main = estimate_order(a.sigma_r, epsilon, t)?;
    let mut all = vec![
        main.clone(),
        chebyshev_order(lambda, epsilon)?,
        chernoff_order_exhaustive(lambda, epsilon)?,
    ];
    all.append(&mut methods);

    let mut r = Report::new(p);
    r.order = Some(OrderReport::from(&main));
    r.methods = all;
    Ok(r)
}

pub fn compare(a: &CompareArgs) -> Result<Report, CliError> {
    let kernel = a.spatial.kernel()?;
    let range = a.range.spec()?;
    let img = Image::load(&a.input)?;
    let run = run_gpa(&img, &kernel, a.sigma_r, a.delta, a.order, a.allow_small_sigma_r, range)?;
    let start = Instant::now();
    let exact = bilateral_exact(&img, &kernel, a.sigma_r)?;
    let ref_ms = elapsed_ms(start);

    let mut p = Params {
        command: "compare".into(),
        input: Some(a.input.clone()),
        sigma_r: Some(a.sigma_r),
        delta: a.delta,
        order: a.order,
        half_range: Some(range.half_range),
        center: Some(range.center),
        allow_small_sigma_r: a.allow_small_sigma_r,
        ..Params::default()
    };
    spatial_params(&mut p, &a.spatial, &kernel);
    image_params(&mut p, &img);
    let mut r = Report::new(p);
    r.errors = Some(Errors::between(&run.out, &exact)?);
    r.order = Some(run.order);
    r.spatial_filterings = Some(run.filterings);
    r.bounds = Some(run.bounds);
    r.runtime_ms.insert("gpa".into(), run.ms);
    r.runtime_ms.insert("reference".into(), ref_ms);
    Ok(r)
}

pub fn kernel_error(a: &KernelErrorArgs) -> Result<Report, CliError> {
    let start = Instant::now();
    let sup = kernel_error_sup(a.order, a.sigma_r, a.half_range)?;
    let ms = elapsed_ms(start);
    let bound = poisson_tail(a.order, (a.half_range / a.sigma_r).powi(2));

    let mut r = Report::new(Params {
        command: "kernel-error".into(),
        sigma_r: Some(a.sigma_r),
        order: Some(a.order),
        half_range: Some(a.half_range),
        ..Params::default()
    });
    r.bounds = Some(Bounds {
        kernel_sup: Some(sup),
        kernel_bound: Some(bound),
        sup_within_bound: Some(sup <= bound),
        accuracy_bound: None,
    });
    r.runtime_ms.insert("kernel_error_sup".into(), ms);
    Ok(r)
}

fn time_runs(
    engine: &mut GpaEngine,
    img: &Image,
    sigma_r: f64,
    n: usize,
    repeats: usize,
) -> Result<(f64, Vec<f64>), CliError> {
    engine.run(img, sigma_r, n, RangeSpec::EIGHT_BIT)?;
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        engine.run(img, sigma_r, n, RangeSpec::EIGHT_BIT)?;
        samples.push(elapsed_ms(start));
    }
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    Ok((sorted[sorted.len() / 2], samples))
}

pub fn bench(a: &BenchArgs) -> Result<Report, CliError> {
    if a.repeats == 0 || a.orders.is_empty() {
        return Err(CliError::Usage("--repeats and --orders must be non-empty".into()));
    }
    let kernel = a.spatial.kernel()?;
    let img = match &a.input {
        Some(path) => Image::load(path)?,
        None => {
            let mut rng = StdRng::seed_from_u64(a.seed);
            Image::from_fn(a.size, a.size, |_, _| rng.random_range(0..=255u8) as f64)
        }
    };

    let mut rows = Vec::new();
    for &n in &a.orders {
        let mut engine = GpaEngine::new(&kernel, img.width(), img.height())?;
        let (median_ms, samples_ms) = time_runs(&mut engine, &img, a.sigma_r, n, a.repeats)?;
        rows.push(BenchRow {
            spatial: a.spatial.spatial,
            window: (a.spatial.spatial == Spatial::Box).then(|| kernel.half_width()),
            n,
            filterings: engine.filterings(),
            median_ms,
            samples_ms,
        });
    }
    let n = a.orders[0];
    for &w in &a.windows {
        let boxk = SpatialKernel::box_filter(w)?;
        let mut engine = GpaEngine::new(&boxk, img.width(), img.height())?;
        let (median_ms, samples_ms) = time_runs(&mut engine, &img, a.sigma_r, n, a.repeats)?;
        rows.push(BenchRow {
            spatial: Spatial::Box,
            window: Some(w),
            n,
            filterings: engine.filterings(),
            median_ms,
            samples_ms,
        });
    }

    let mut p = Params {
        command: "bench".into(),
        input: a.input.clone(),
        sigma_r: Some(a.sigma_r),
        ..Params::default()
    };
    spatial_params(&mut p, &a.spatial, &kernel);
    image_params(&mut p, &img);
    let mut r = Report::new(p);
    r.bench = rows;
    Ok(r)
}
