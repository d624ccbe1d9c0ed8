use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lgtt::frobenius::{connection_residuals, frobenius_data, frobenius_summary, frobenius_tensor, FlatChart};
use lgtt::linalg::matrix_csv;
use lgtt::newton::{is_convenient, is_nondegenerate_laurent, newton_polytope};
use lgtt::poly::{
    classify_invertible, diagonal_symmetries, format_complex, parse_complex, parse_complex_list, quasi_weights, rat_to_string,
    read_family_file, DeformationFamily, InvertibleClass,
};
use lgtt::singularity::{milnor_algebra, moduli_count, Mu};
use lgtt::spectral::{assemble_twisted_laplacian, harmonic_dimension, lowest_eigenpairs_with, EigenOptions, SpectralGrid};
use lgtt::tame::{tameness_certificate, ProbeSpec, TameVerdict};
use lgtt::thimble::{
    critical_points, detect_walls, monodromy_along_loop, period_matrix, t_loop, tau_loop, trace_thimble, witten_half_monodromy,
    witten_matrix, Mode, PeriodOptions, Sign, TraceOptions,
};
use lgtt::{Error, Result};

use crate::manifest::{digest_file, manifest_path, sha256_hex, OutputDigest, RunManifest};
use crate::{Cli, Command, Format, PeriodMode};

/// Text report plus named output tables; the first table is the primary one.
pub struct Outcome {
    pub report: String,
    pub tables: Vec<(String, String)>,
    pub inputs: Vec<PathBuf>,
    pub tolerances: Vec<(String, f64)>,
    pub grid: Option<(f64, f64)>,
    pub family: Option<DeformationFamily>,
    pub perturbations: Vec<String>,
}

impl Outcome {
    fn new(report: String) -> Self {
        Outcome { report, tables: vec![], inputs: vec![], tolerances: vec![], grid: None, family: None, perturbations: vec![] }
    }
}

fn load(cli: &Cli, file: &Path) -> Result<DeformationFamily> {
    let fam = read_family_file(file)?;
    let tau = match &cli.global.tau {
        Some(s) => parse_complex(s)?,
        None => fam.tau,
    };
    let t = match &cli.global.t {
        Some(s) => {
            let t = parse_complex_list(s)?;
            if t.len() != fam.deformers.len() {
                return Err(Error::Domain(format!("--t has {} values for {} deformers", t.len(), fam.deformers.len())));
            }
            t
        }
        None => fam.t.clone(),
    };
    fam.at(&t, tau)
}

fn grid(cli: &Cli) -> Result<SpectralGrid> {
    SpectralGrid::new(cli.global.grid_r.unwrap_or(4.0), cli.global.grid_h.unwrap_or(1.0 / 16.0))
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Moduli { n, d } => {
            let m = moduli_count(*n, *d)?;
            let verdict = if m.exceptional { "no" } else { "yes" };
            Ok(Outcome::new(format!("moduli_dim={} marginal={} match={}\n", m.moduli_dim, m.marginal_count, verdict)))
        }
        Command::Analyze { file } => {
            let fam = load(cli, file)?;
            let f = &fam.base;
            let mut r = String::new();
            writeln!(r, "vars = [{}]", f.vars().join(", ")).unwrap();
            match quasi_weights(f) {
                Some(w) => {
                    let q: Vec<String> = w.q.iter().map(rat_to_string).collect();
                    writeln!(r, "weights = [{}]", q.join(", ")).unwrap();
                    writeln!(r, "central_charge = {}", rat_to_string(&w.central_charge())).unwrap();
                }
                None => writeln!(r, "weights = none").unwrap(),
            }
            match classify_invertible(f) {
                InvertibleClass::Blocks(bs) => {
                    let parts: Vec<String> = bs.iter().map(|b| format!("{:?}{:?}", b.kind, b.exponents)).collect();
                    writeln!(r, "invertible = {}", parts.join(" + ")).unwrap();
                }
                InvertibleClass::NotInvertible(why) => writeln!(r, "invertible = no ({why})").unwrap(),
            }
            let alg = milnor_algebra(f)?;
            match alg.mu {
                Mu::Finite(m) => writeln!(r, "mu = {m}").unwrap(),
                Mu::Infinite => writeln!(r, "mu = infinite").unwrap(),
            }
            match diagonal_symmetries(f) {
                Ok(gw) => {
                    writeln!(r, "symmetry_order = {}", gw.order).unwrap();
                    writeln!(r, "symmetry_orders = [{}]", join(&gw.orders)).unwrap();
                    let j: Vec<String> = gw.j_w.iter().map(rat_to_string).collect();
                    writeln!(r, "j_w = [{}]", j.join(", ")).unwrap();
                }
                Err(e) => writeln!(r, "symmetry_order = none ({e})").unwrap(),
            }
            let cert = tameness_certificate(&fam, None)?;
            writeln!(r, "tameness = {}", verdict_text(&cert.verdict)).unwrap();
            writeln!(r, "tameness_rule = {}", cert.rule).unwrap();
            let mut o = Outcome::new(r);
            o.inputs.push(file.clone());
            o.family = Some(fam);
            Ok(o)
        }
        Command::Newton { file } => {
            let fam = load(cli, file)?;
            let f = fam.member_exact()?;
            let np = newton_polytope(&f)?;
            let cert = is_nondegenerate_laurent(&f, g.seed)?;
            let mut r = String::new();
            writeln!(r, "dim = {}", np.dim).unwrap();
            writeln!(r, "vertices = {}", np.vertices.len()).unwrap();
            for d in 0..np.dim {
                writeln!(r, "faces_dim_{d} = {}", np.faces.iter().filter(|f| f.dim == d).count()).unwrap();
            }
            writeln!(r, "interior_points = {}", np.interior_points.len()).unwrap();
            writeln!(r, "convenient = {}", is_convenient(&f)).unwrap();
            writeln!(r, "nondegenerate = {cert:?}").unwrap();
            let mut csv = String::from("kind,index,exponent\n");
            for (k, v) in np.vertices.iter().enumerate() {
                writeln!(csv, "vertex,{k},{}", v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")).unwrap();
            }
            for (k, v) in np.interior_points.iter().enumerate() {
                writeln!(csv, "interior,{k},{}", v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")).unwrap();
            }
            let mut o = Outcome::new(r);
            o.tables.push(("polytope.csv".into(), csv));
            o.inputs.push(file.clone());
            o.family = Some(fam);
            Ok(o)
        }
        Command::Tame { file, radii, c, samples } => {
            let fam = load(cli, file)?;
            let probe = match radii {
                Some(s) => {
                    let radii = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| Error::Parse { pos: 0, msg: e.to_string() })).collect::<Result<Vec<_>>>()?;
                    Some(ProbeSpec { c: *c, radii, samples_per_sphere: *samples, seed: g.seed })
                }
                None => None,
            };
            let cert = tameness_certificate(&fam, probe.as_ref())?;
            if g.strict && matches!(cert.verdict, TameVerdict::Evidence(_) | TameVerdict::Unknown) {
                return Err(Error::Domain(format!("no proved tameness rule applies: {}", cert.rule)));
            }
            let mut o = Outcome::new(format!("verdict = {}\nrule = {}\n", verdict_text(&cert.verdict), cert.rule));
            if let Some(p) = &cert.probe {
                o.tables.push(("probe.csv".into(), p.to_csv()));
            }
            o.inputs.push(file.clone());
            o.family = Some(fam);
            Ok(o)
        }
        Command::Spectrum { file, degree, zero_band, gap } => {
            let fam = load(cli, file)?;
            let f = fam.member_univariate()?.scale(fam.tau);
            let grid = grid(cli)?;
            let op = assemble_twisted_laplacian(&f, *degree, &grid, g.strict)?;
            for w in &op.warnings {
                eprintln!("warning: {w}");
            }
            let opts = EigenOptions { seed: g.seed, ..EigenOptions::default() };
            let res = lowest_eigenpairs_with(&op, g.k, g.tol, &opts)?;
            let mut r = String::new();
            writeln!(r, "degree = {degree}").unwrap();
            writeln!(r, "eigenvalues = [{}]", res.eigenvalues.iter().map(|x| format!("{x:.10e}")).collect::<Vec<_>>().join(", ")).unwrap();
            writeln!(r, "iterations = {}", res.iterations).unwrap();
            match harmonic_dimension(&res, *zero_band, *gap) {
                Ok(d) => writeln!(r, "harmonic_dimension = {d}").unwrap(),
                Err(e) if g.strict => return Err(e),
                Err(e) => writeln!(r, "harmonic_dimension = undetermined ({e})").unwrap(),
            }
            let mut o = Outcome::new(r);
            o.tables.push(("eigenvalues.csv".into(), res.eigenvalue_csv()));
            for (k, fld) in res.eigenfields.iter().enumerate() {
                o.tables.push((format!("mode{}.csv", k + 1), fld.plot_columns()));
            }
            o.inputs.push(file.clone());
            o.tolerances.push(("eigen_tol".into(), g.tol));
            o.grid = Some((grid.half_width, grid.spacing));
            o.family = Some(fam);
            Ok(o)
        }
        Command::Thimbles { file } => {
            let fam = load(cli, file)?;
            let f = fam.member_univariate()?;
            let crit = critical_points(&f)?;
            let walls = detect_walls(&crit, fam.tau, 1e-9);
            let mut r = String::new();
            writeln!(r, "critical_points = {}", crit.len()).unwrap();
            writeln!(r, "walls = {}", walls.len()).unwrap();
            let mut o = Outcome::new(String::new());
            for a in crit.phase_order(fam.tau) {
                for sign in [Sign::Minus, Sign::Plus] {
                    let th = trace_thimble(&f, fam.tau, &crit, a, sign, &TraceOptions::default())?;
                    let rel = th.phase_error / (1.0 + (fam.tau * th.value).norm());
                    if rel > 1e-6 {
                        if g.strict {
                            return Err(Error::Quadrature(format!("phase drift {rel:e} on thimble {}", a + 1)));
                        }
                        eprintln!("warning: phase drift {rel:e} on thimble {}", a + 1);
                    }
                    let tag = if sign == Sign::Minus { "minus" } else { "plus" };
                    writeln!(r, "thimble {} {tag}: center = {}, value = {}, points = {}, phase_error = {:e}", a + 1, format_complex(th.center), format_complex(th.value), th.z.len(), th.phase_error).unwrap();
                    o.tables.push((format!("a{}.{tag}.csv", a + 1), th.to_csv(&f)));
                }
            }
            o.report = r;
            o.inputs.push(file.clone());
            o.family = Some(fam);
            Ok(o)
        }
        Command::Periods { file, mode, perturb } => {
            let fam = load(cli, file)?;
            let mode = match mode {
                PeriodMode::Holomorphic => Mode::Holomorphic,
                PeriodMode::Twisted => Mode::Twisted,
            };
            let opts = PeriodOptions { mode, wall_rotation: *perturb, ..PeriodOptions::default() };
            let pm = period_matrix(&fam, &opts)?;
            let mut r = String::new();
            writeln!(r, "mu = {}", pm.primitive.len()).unwrap();
            writeln!(r, "mode = {mode:?}").unwrap();
            writeln!(r, "det_minus = {}", format_complex(pm.minus.determinant())).unwrap();
            let mut o = Outcome::new(String::new());
            if let Some(t) = &pm.perturbed_t {
                let s = format!("t -> [{}]", t.iter().map(|z| format_complex(*z)).collect::<Vec<_>>().join(", "));
                writeln!(r, "wall_perturbation = {s}").unwrap();
                o.perturbations.push(s);
            }
            if mode == Mode::Holomorphic {
                let w = witten_matrix(&pm)?;
                writeln!(r, "witten_integrality_defect = {:e}", w.integrality_defect).unwrap();
                writeln!(r, "witten_det = {}", format_complex(w.det)).unwrap();
                for row in &w.rounded {
                    writeln!(r, "witten_row = [{}]", join(row)).unwrap();
                }
            }
            o.report = r;
            o.tables.push(("periods.csv".into(), pm.to_csv()));
            o.tables.push(("plus.csv".into(), matrix_csv(&pm.plus)));
            o.inputs.push(file.clone());
            o.family = Some(fam);
            Ok(o)
        }
        Command::Monodromy { file, path, steps, half } => {
            let fam = load(cli, file)?;
            let pts = if path == "tau" {
                tau_loop(fam.tau, &fam.t, *steps)
            } else {
                let parts: Vec<&str> = path.split(':').collect();
                let bad = || Error::Parse { pos: 0, msg: format!("loop {path:?}: expected tau or t:J:RADIUS") };
                if parts.len() != 3 || parts[0] != "t" {
                    return Err(bad());
                }
                let j: usize = parts[1].parse().map_err(|_| bad())?;
                let radius: f64 = parts[2].parse().map_err(|_| bad())?;
                if j == 0 || j > fam.t.len() {
                    return Err(Error::IndexOutOfRange { index: j, len: fam.t.len() });
                }
                t_loop(fam.tau, &fam.t, j - 1, radius, *steps)
            };
            let res = monodromy_along_loop(&fam, &pts)?;
            let mut r = res.report();
            if *half {
                let k = witten_half_monodromy(&fam, *steps / 2)?;
                r.push_str("half_loop\n");
                for row in &k.matrix {
                    writeln!(r, "{}", row.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")).unwrap();
                }
            }
            let mut o = Outcome::new(r.clone());
            o.tables.push(("monodromy.txt".into(), r));
            o.inputs.push(file.clone());
            o.family = Some(fam);
            Ok(o)
        }
        Command::Frobenius { file, delta } => {
            let fam = load(cli, file)?;
            let data = frobenius_data(&fam)?;
            let chart = FlatChart::for_family(&fam).ok();
            let x = match &chart {
                Some(c) => c.flat(&fam.t),
                None => fam.t.clone(),
            };
            let report = frobenius_tensor(&fam, chart.as_ref(), &[x], *delta)?;
            let mut r = frobenius_summary(&data, Some(&report));
            writeln!(r, "flat_chart = {}", chart.is_some()).unwrap();
            let mut o = Outcome::new(String::new());
            if fam.nvars() == 1 && fam.base.is_polynomial() {
                match connection_residuals(&fam, &[(fam.tau, fam.t.clone())], *delta, &PeriodOptions::default()) {
                    Ok(c) => {
                        let row = &c.rows[0];
                        writeln!(r, "derivative_residual = {:e}", row.derivative_residual).unwrap();
                        writeln!(r, "tau_residual_raw = {:e}", row.tau_residual_raw).unwrap();
                        writeln!(r, "tau_residual_corrected = {:e}", row.tau_residual_corrected).unwrap();
                        writeln!(r, "flatness_residual = {:e}", row.flatness_residual).unwrap();
                        o.tables.push(("connection.csv".into(), c.to_csv()));
                    }
                    Err(e) if g.strict => return Err(e),
                    Err(e) => writeln!(r, "connection = skipped ({e})").unwrap(),
                }
            }
            o.tables.insert(0, ("tensor.csv".into(), report.to_csv()));
            o.report = r;
            o.inputs.push(file.clone());
            o.tolerances.push(("fd_step".into(), *delta));
            o.family = Some(fam);
            Ok(o)
        }
    }
}

fn verdict_text(v: &TameVerdict) -> String {
    match v {
        TameVerdict::StronglyTame(rule) => format!("StronglyTame({rule:?})"),
        TameVerdict::NotStronglyTame(why) => format!("NotStronglyTame({why})"),
        TameVerdict::Evidence(p) => format!("Evidence(increasing={})", p.increasing),
        TameVerdict::Unknown => "Unknown".into(),
    }
}

fn side_path(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

/// Print the report; with --out write the primary table to the given path, the
/// others next to it, and a manifest beside each file.
pub fn emit(cli: &Cli, o: Outcome, start: Instant) -> Result<()> {
    let g = &cli.global;
    let io = |e: std::io::Error| Error::Io(e.to_string());
    let Some(out) = &g.out else {
        match (g.format, o.tables.first()) {
            (Format::Csv, Some((_, csv))) => print!("{csv}"),
            _ => print!("{}", o.report),
        }
        return Ok(());
    };
    let mut files: Vec<(PathBuf, String)> = vec![];
    match o.tables.split_first() {
        Some(((_, first), rest)) => {
            files.push((out.clone(), first.clone()));
            files.push((side_path(out, "report.txt"), o.report.clone()));
            for (suffix, body) in rest {
                files.push((side_path(out, suffix), body.clone()));
            }
        }
        None => files.push((out.clone(), o.report.clone())),
    }
    for (p, body) in &files {
        std::fs::write(p, body).map_err(io)?;
    }
    let inputs = o.inputs.iter().map(|p| digest_file(p)).collect::<std::io::Result<Vec<_>>>().map_err(io)?;
    let mut tolerances = vec![("tol".to_string(), g.tol)];
    tolerances.extend(o.tolerances);
    let manifest = RunManifest {
        command: cli.command_name().into(),
        argv: std::env::args().collect(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        inputs,
        seed: g.seed,
        tolerances,
        grid: o.grid,
        tau: o.family.as_ref().map(|f| format_complex(f.tau)),
        t: o.family.as_ref().map_or(vec![], |f| f.t.iter().map(|z| format_complex(*z)).collect()),
        wall_perturbations: o.perturbations,
        outputs: files.iter().map(|(p, b)| OutputDigest { path: p.display().to_string(), sha256: sha256_hex(b.as_bytes()) }).collect(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    for (p, _) in &files {
        manifest.write(&manifest_path(p)).map_err(io)?;
    }
    if g.format == Format::Text {
        print!("{}", o.report);
    }
    Ok(())
}

impl Cli {
    pub fn command_name(&self) -> &'static str {
        self.command.name()
    }
}
