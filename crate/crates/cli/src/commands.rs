use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use basinforge::autoseq::{verify_uniform_bounds, Sequence};
use basinforge::basin::{self, OrbitOptions, Slice};
use basinforge::curves::entire_curve;
use basinforge::normalform::rosay_rudin;
use basinforge::point::{self, Point};
use basinforge::trains::{self, build_chain, check_gap, TrainChain};
use basinforge::{Error, PolyMap2, SequenceSpec};

use crate::manifest::{self, Run, RunManifest};
use crate::{
    BasinArgs, BiholoArgs, Command, CurveArgs, NormalformArgs, SweepArgs, SweepRun, TrainsArgs, Usage, VerifyArgs,
};

/// Steps cached by the sequence wrappers; later steps are generated on demand.
const SEQ_CACHE: usize = 1024;
const RESIDUAL_TOL: f64 = 1e-10;

pub fn dispatch(cmd: &Command, run: &mut Run) -> Result<()> {
    match cmd {
        Command::Basin(a) => basin_cmd(a, run),
        Command::Normalform(a) => normalform_cmd(a, run),
        Command::Trains(a) => trains_cmd(a, run),
        Command::Biholo(a) => biholo_cmd(a, run),
        Command::Curve(a) => curve_cmd(a, run),
        Command::Verify(a) => verify_cmd(a, run),
        Command::Sweep(a) => sweep_cmd(a, run),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_spec(path: &Path, run: &mut Run) -> Result<SequenceSpec> {
    let spec = SequenceSpec::from_json(&read(path)?).with_context(|| format!("spec {}", path.display()))?;
    run.spec_hash = Some(spec.hash());
    Ok(spec)
}

fn write_file(path: &Path, bytes: &[u8], run: &mut Run) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    run.output(path);
    Ok(())
}

fn pretty(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Writes to `out`, or to stdout when there is no path.
fn emit(out: Option<&Path>, bytes: &[u8], run: &mut Run) -> Result<()> {
    match out {
        Some(p) => write_file(p, bytes, run),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
            Ok(())
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Usage(format!("--{name} must be a positive number, got {v}")).into())
    }
}

fn basin_cmd(a: &BasinArgs, run: &mut Run) -> Result<()> {
    let spec = load_spec(&a.spec, run)?;
    let slice: Slice =
        serde_json::from_str(&read(&a.slice)?).with_context(|| format!("slice {}", a.slice.display()))?;
    let radius = match a.radius {
        Some(r) => positive("radius", r)?,
        None => basin::default_radius(&spec, 64),
    };
    let opts = OrbitOptions::new(a.max_iter, radius);
    let raster = basin::raster(&Sequence::new(&spec, SEQ_CACHE), &slice, &opts)?;
    raster.write_all(&a.out, &spec.hash(), &opts)?;
    for name in ["raster.pgm", "raster.csv", "raster.json"] {
        run.output(&a.out.join(name));
    }
    run.residual("radius", radius);
    run.residual("pixels", slice.width * slice.height);
    run.residual("members", raster.member_count());
    Ok(())
}

fn normalform_cmd(a: &NormalformArgs, run: &mut Run) -> Result<()> {
    let map: PolyMap2 = serde_json::from_str(&read(&a.map)?).with_context(|| format!("map {}", a.map.display()))?;
    let canon = serde_json::to_string(&map)?;
    run.spec_hash = Some(hex::encode(Sha256::digest(canon.as_bytes())));
    let nf = rosay_rudin(&map.to_jet(a.k), a.k)?;
    run.residual("residual", nf.residual);
    run.residual("lambda_moduli", [nf.lambda1.norm(), nf.lambda2.norm()]);
    write_file(&a.out, &pretty(&nf)?, run)
}

/// The contracts the chain must meet before it is handed out.
fn check_chain(chain: &TrainChain, run: &mut Run) -> Result<()> {
    let s = chain.summary();
    run.residual("max_residual", s.max_residual);
    run.residual("trains", s.trains);
    run.residual("closed_trains", s.closed_trains);
    run.residual("horizon", s.horizon);
    run.residual("shear_sups", s.shear_sups);
    run.residual("shear_bounds", s.shear_bounds);
    let worst =
        chain.conjugacy.residuals.iter().enumerate().fold((0, 0.0f64), |w, (n, &r)| if r > w.1 { (n, r) } else { w });
    if worst.1 > RESIDUAL_TOL {
        return Err(Error::Residual { n: worst.0, residual: worst.1, tol: RESIDUAL_TOL }.into());
    }
    for (i, name) in ["sup|alpha|", "sup|beta|"].iter().enumerate() {
        if s.shear_sups[i] > s.shear_bounds[i] * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "{name} <= bound fails: {:.6e} > {:.6e}",
                s.shear_sups[i], s.shear_bounds[i]
            ))
            .into());
        }
    }
    Ok(())
}

fn trains_cmd(a: &TrainsArgs, run: &mut Run) -> Result<()> {
    let mut spec = load_spec(&a.spec, run)?;
    if let Some(k) = a.k {
        spec.k = k;
        spec.validate()?;
        run.spec_hash = Some(spec.hash());
    }
    let chain = build_chain(&spec, a.nmax)?;
    write_file(&a.out, chain.to_json()?.as_bytes(), run)?;
    check_chain(&chain, run)
}

/// Rows of `re1,im1,re2,im2`; a first row that does not parse is a header.
fn read_points(path: &Path) -> Result<Vec<Point>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("points {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = match rec.iter().map(str::parse).collect::<Result<_, _>>() {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Usage(format!("{} line {}: {e}", path.display(), i + 1)).into()),
        };
        if vals.len() != 4 {
            return Err(
                Usage(format!("{} line {}: expected 4 columns, got {}", path.display(), i + 1, vals.len())).into()
            );
        }
        out.push(point::from_reals([vals[0], vals[1], vals[2], vals[3]]));
    }
    Ok(out)
}

fn biholo_cmd(a: &BiholoArgs, run: &mut Run) -> Result<()> {
    let spec = load_spec(&a.spec, run)?;
    let chain = TrainChain::from_json(&read(&a.chain)?).with_context(|| format!("chain {}", a.chain.display()))?;
    if chain.spec_hash != spec.hash() {
        return Err(
            Usage(format!("{} was built from a different spec (hash {})", a.chain.display(), chain.spec_hash)).into()
        );
    }
    let points = read_points(&a.points)?;
    let n = a.nmax.unwrap_or(chain.n_max);
    let radius = match a.radius {
        Some(r) => positive("radius", r)?,
        None => basin::default_radius(&spec, 64),
    };
    let opts = OrbitOptions::new(a.max_iter, radius);
    let trs = trains::biholo_points(&Sequence::new(&spec, SEQ_CACHE), &chain, &points, n, &opts)?;
    let mut csv = Vec::new();
    trains::write_biholo_csv(&trs, &mut csv)?;
    run.residual("points", trs.len());
    run.residual("n", n);
    run.residual("max_last_increment", trs.iter().map(|t| t.last_increment()).fold(0.0, f64::max));
    run.residual("max_scaled_increment", trs.iter().map(|t| t.scaled_increment()).fold(0.0, f64::max));
    run.residual("stalled", trs.iter().filter(|t| t.stalled_at.is_some()).count());
    run.residual("non_members", trs.iter().filter(|t| t.entry_index.is_none()).count());
    emit(a.out.as_deref(), &csv, run)
}

fn parse_point(flag: &str, s: &str) -> Result<Point> {
    point::parse(s).ok_or_else(|| Usage(format!("--{flag} expects \"re1,im1,re2,im2\", got {s:?}")).into())
}

fn curve_cmd(a: &CurveArgs, run: &mut Run) -> Result<()> {
    let spec = load_spec(&a.spec, run)?;
    let p = parse_point("point", &a.point)?;
    let v = parse_point("dir", &a.dir)?;
    let curve = entire_curve(&spec, p, v, positive("radius", a.radius)?, positive("eps", a.eps)?, a.inner)?;
    run.residual("rounds", curve.rounds.len());
    run.residual("initial_radius", curve.initial_radius);
    run.residual("final_radius", curve.rounds.last().map_or(curve.initial_radius, |r| r.radius_after));
    run.residual("max_sampled_sup", curve.rounds.iter().map(|r| r.sampled_sup).fold(0.0, f64::max));
    run.residual("stability_certified", curve.rounds.iter().filter(|r| r.stability_certified).count());
    let mut bytes = serde_json::to_vec(&curve)?;
    bytes.push(b'\n');
    write_file(&a.out, &bytes, run)
}

fn verify_cmd(a: &VerifyArgs, run: &mut Run) -> Result<()> {
    let spec = load_spec(&a.spec, run)?;
    let rep = verify_uniform_bounds(&spec, a.nmax, a.samples);
    run.residual("lower_violations", rep.lower_violations);
    run.residual("upper_violations", rep.upper_violations);
    run.residual("first_lower_violation", rep.first_lower_violation);
    run.residual("largest_clean_radius", rep.largest_clean_radius);
    run.residual("gap_holds", check_gap(&spec).is_ok());
    emit(a.out.as_deref(), &pretty(&rep)?, run)
}

/// One swept parameter: its name and grid values.
#[derive(Debug, Clone, Serialize)]
struct Axis {
    name: String,
    values: Vec<f64>,
}

fn parse_axis(s: &str) -> Result<Axis> {
    let bad = || Usage(format!("--param expects NAME=start:stop:step, got {s:?}"));
    let (name, range) = s.split_once('=').ok_or_else(bad)?;
    if !["C", "D", "k", "seed", "short_a0", "coeff_bound"].contains(&name) {
        return Err(Usage(format!("unknown sweep parameter {name:?}")).into());
    }
    let parts: Vec<f64> = range.split(':').map(str::parse).collect::<Result<_, _>>().map_err(|_| bad())?;
    let values = match parts[..] {
        [v] => vec![v],
        [start, stop, step] if step > 0.0 && stop >= start && (stop - start) / step < 1e6 => {
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // rounded so the grid does not carry accumulated representation error
            (0..count).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
        }
        _ => return Err(bad().into()),
    };
    Ok(Axis { name: name.to_string(), values })
}

fn set_param(spec: &mut SequenceSpec, name: &str, v: f64) -> Result<()> {
    let int = || -> Result<u64> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as u64)
        } else {
            Err(Usage(format!("{name} must be a nonnegative integer, got {v}")).into())
        }
    };
    match name {
        "C" => spec.c = v,
        "D" => spec.d = v,
        "k" => spec.k = int()? as usize,
        "seed" => spec.seed = int()?,
        "short_a0" => spec.short_a0 = v,
        "coeff_bound" => spec.coeff_bound = v,
        _ => unreachable!("checked in parse_axis"),
    }
    Ok(())
}

/// Cartesian product of the axes, last axis fastest.
fn grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, ax| {
        acc.iter().flat_map(|head| ax.values.iter().map(move |&v| [head.clone(), vec![v]].concat())).collect()
    })
}

#[derive(Serialize)]
struct PointStatus {
    dir: PathBuf,
    values: Vec<f64>,
    exit_code: u8,
}

fn sweep_point(a: &SweepArgs, template: &SequenceSpec, axes: &[Axis], values: &[f64], dir: &Path) -> Result<u8> {
    let start = Instant::now();
    let mut run = Run::default();
    let result = (|| -> Result<()> {
        let mut spec = template.clone();
        for (ax, &v) in axes.iter().zip(values) {
            set_param(&mut spec, &ax.name, v)?;
        }
        spec.validate()?;
        run.spec_hash = Some(spec.hash());
        write_file(&dir.join("spec.json"), spec.to_json().as_bytes(), &mut run)?;
        match a.run {
            SweepRun::Verify => {
                let rep = verify_uniform_bounds(&spec, a.nmax, a.samples);
                run.residual("lower_violations", rep.lower_violations);
                run.residual("upper_violations", rep.upper_violations);
                run.residual("largest_clean_radius", rep.largest_clean_radius);
                run.residual("gap_holds", check_gap(&spec).is_ok());
                write_file(&dir.join("report.json"), &pretty(&rep)?, &mut run)
            }
            SweepRun::Trains => {
                let chain = build_chain(&spec, a.nmax)?;
                write_file(&dir.join("chain.json"), chain.to_json()?.as_bytes(), &mut run)?;
                check_chain(&chain, &mut run)
            }
        }
    })();
    let (code, error) = match &result {
        Ok(()) => (0, None),
        Err(e) => (crate::exit_code(e), Some(crate::message(e))),
    };
    let params: serde_json::Map<String, serde_json::Value> =
        axes.iter().zip(values).map(|(ax, v)| (ax.name.clone(), serde_json::json!(v))).collect();
    let m = RunManifest {
        command: format!("sweep/{}", if a.run == SweepRun::Verify { "verify" } else { "trains" }),
        spec_hash: run.spec_hash,
        parameters: serde_json::json!({ "template": a.template, "grid_point": params, "nmax": a.nmax, "samples": a.samples }),
        version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        status: if code == 0 { "ok" } else { "failed" },
        exit_code: code,
        error,
        residuals: run.residuals,
        outputs: run.outputs,
    };
    m.write(&manifest::inside(dir))?;
    Ok(code)
}

fn sweep_cmd(a: &SweepArgs, run: &mut Run) -> Result<()> {
    let template =
        SequenceSpec::from_json(&read(&a.template)?).with_context(|| format!("template {}", a.template.display()))?;
    run.spec_hash = Some(template.hash());
    let axes: Vec<Axis> = a.param.iter().map(|s| parse_axis(s)).collect::<Result<_>>()?;
    let points = grid(&axes);
    let statuses: Vec<PointStatus> = points
        .par_iter()
        .enumerate()
        .map(|(i, values)| {
            let dir = a.out.join(format!("p{i:04}"));
            let code = sweep_point(a, &template, &axes, values, &dir)?;
            Ok(PointStatus { dir, values: values.clone(), exit_code: code })
        })
        .collect::<Result<_>>()?;
    for s in &statuses {
        run.output(&manifest::inside(&s.dir));
    }
    let failed = statuses.iter().filter(|s| s.exit_code != 0).count();
    run.residual("axes", &axes);
    run.residual("grid_points", statuses.len());
    run.residual("failed", failed);
    run.residual("points", &statuses);
    if failed > 0 {
        return Err(Error::Precondition(format!(
            "{failed} of {} grid points failed; see their manifests",
            statuses.len()
        ))
        .into());
    }
    Ok(())
}
