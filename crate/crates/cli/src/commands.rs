//! Subcommand implementations; each returns the CSV text to emit.

use catcool::cnu::{
    build_plan, build_plan_general, check_cnu1, check_cnu1_general, diagram_export,
    diagram_export_joint, execute_plan, synthesize_catalyst, synthesize_ground_catalyst,
    Cnu1Certificate, SynthesizedCatalyst, TransformPlan, VerificationReport,
};
use catcool::cooling::{
    catalytic_enhancement_degenerate3, enhancement_cold_sweep, enhancement_hot_sweep,
    optimal_qubit_diagonal_sweep, optimal_qubit_sweep,
};
use catcool::currents::{parse_rotations, JointState};
use catcool::error::Error;
use catcool::multiqubit::{
    gamma_sweep, p2_from_beta, performance_ratio, xi_sweep, QubitEnsembleParams,
};
use catcool::oracle::{run_oracle_check, OracleCheck};
use catcool::report::{fmt_num, Cell, SweepReport};
use catcool::state::{is_passive_wrt_cold, DiagonalState};
use catcool::thermometry::{
    balanced_catalyst, finite_difference_sensitivity, probe_after_optimal_swap,
    sensitivity_after_catalytic, thermometry_sweep, ErrorUnits, ThermometrySetup, FD_STEP,
};

use crate::input::{parse_grid, parse_probs, parse_usize_list};
use crate::{Cli, CliError, Command, EnhanceMode, MbcSweep, Spectra, Units};

/// On failure the error may come with CSV that is still worth emitting.
pub type Outcome = Result<String, (CliError, Option<String>)>;

fn plain<T>(r: Result<T, CliError>) -> Result<T, (CliError, Option<String>)> {
    r.map_err(|e| (e, None))
}

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Passivity { pc, ph } => plain(passivity(pc, ph)),
        Command::Cnu1Check { spectra } => plain(cnu1_check(spectra)),
        Command::Cnu1Run {
            spectra,
            plan,
            plan_out,
        } => plain(cnu1_run(spectra, plan.as_deref(), plan_out.as_deref())),
        Command::Synthesize { pc, ph, ground } => plain(synthesize(pc, ph.as_deref(), *ground)),
        Command::Diagram { spectra, no_plan } => plain(diagram(spectra, *no_plan)),
        Command::OptimalQubit {
            p2c,
            p2h,
            n,
            diagonal,
            p2,
        } => plain(optimal_qubit(p2c, p2h, n, *diagonal, p2)),
        Command::Enhance {
            mode,
            x,
            y,
            points,
            p2c,
            p1v,
        } => plain(enhance(*mode, *x, *y, *points, *p2c, *p1v)),
        Command::MbcVsCc {
            n,
            nc,
            p2,
            beta,
            sweep,
            kmax,
            points,
            betas,
        } => plain(mbc_vs_cc(
            *n, *nc, *p2, *beta, *sweep, *kmax, *points, betas,
        )),
        Command::Thermometry {
            ratio,
            eps3,
            p1v,
            x,
            units,
            fd_check,
        } => thermometry(*ratio, *eps3, *p1v, x, *units, *fd_check),
        Command::Oracle { check, instances } => oracle(check, *instances, cli.seed),
    }
}

fn key_values(rows: Vec<(&str, Cell)>) -> Result<String, CliError> {
    let mut r = SweepReport::new(&["quantity", "value"]);
    for (k, v) in rows {
        r.push(vec![k.into(), v])?;
    }
    Ok(r.to_csv())
}

fn joined(p: &[f64]) -> Cell {
    Cell::Text(p.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(";"))
}

fn passivity(pc: &str, ph: &str) -> Result<String, CliError> {
    let (pc, ph) = (parse_probs("pc", pc)?, parse_probs("ph", ph)?);
    key_values(vec![("passive", is_passive_wrt_cold(&pc, &ph).into())])
}

enum Parsed {
    ColdHot(DiagonalState, DiagonalState, DiagonalState),
    System(DiagonalState, DiagonalState),
}

impl Parsed {
    fn from(s: &Spectra) -> Result<Self, CliError> {
        let pv = parse_probs("pv", &s.pv)?;
        match (&s.ps, &s.pc, &s.ph) {
            (Some(ps), None, None) => Ok(Parsed::System(parse_probs("ps", ps)?, pv)),
            (None, Some(pc), Some(ph)) => Ok(Parsed::ColdHot(
                parse_probs("pc", pc)?,
                parse_probs("ph", ph)?,
                pv,
            )),
            _ => Err(CliError::Usage("give either --pc and --ph, or --ps".into())),
        }
    }

    fn certificate(&self) -> Option<Cnu1Certificate> {
        match self {
            Parsed::ColdHot(c, h, v) => check_cnu1(c, h, v),
            Parsed::System(s, v) => check_cnu1_general(s, v),
        }
    }

    fn plan(&self, cert: &Cnu1Certificate) -> Result<TransformPlan, CliError> {
        Ok(match self {
            Parsed::ColdHot(c, h, v) => build_plan(c, h, v, cert)?,
            Parsed::System(s, v) => build_plan_general(s, v, cert)?,
        })
    }

    fn state(&self) -> Result<JointState, CliError> {
        Ok(match self {
            Parsed::ColdHot(c, h, v) => JointState::product(&[c, h, v])?,
            Parsed::System(s, v) => JointState::product(&[s, v])?,
        })
    }
}

fn certificate_row(c: Option<&Cnu1Certificate>) -> Result<String, CliError> {
    let mut r = SweepReport::new(&["found", "i", "l", "l_prime", "chain_kind", "loop_current"]);
    r.push(match c {
        Some(c) => vec![
            true.into(),
            (c.i + 1).into(),
            (c.l + 1).into(),
            (c.l_prime + 1).into(),
            c.chain_kind.name().into(),
            c.loop_current.into(),
        ],
        None => vec![
            false.into(),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
        ],
    })?;
    Ok(r.to_csv())
}

fn cnu1_check(s: &Spectra) -> Result<String, CliError> {
    certificate_row(Parsed::from(s)?.certificate().as_ref())
}

fn report_rows(rep: &VerificationReport) -> Vec<(&'static str, Cell)> {
    vec![
        ("delta_p1", rep.delta_p1().into()),
        (
            "realized_cooling_current",
            rep.realized_cooling_current.into(),
        ),
        ("catalyst_max_deviation", rep.catalyst_max_deviation.into()),
        ("max_prefix_gain", rep.max_prefix_gain.into()),
        (
            "violated_prefix",
            rep.violated_prefix.map_or(Cell::Empty, Cell::from),
        ),
        ("non_unital", rep.is_non_unital().into()),
        ("cold_before", joined(&rep.cold_before)),
        ("cold_after", joined(&rep.cold_after)),
    ]
}

fn cnu1_run(
    s: &Spectra,
    plan_file: Option<&std::path::Path>,
    plan_out: Option<&std::path::Path>,
) -> Result<String, CliError> {
    let parsed = Parsed::from(s)?;
    let state = parsed.state()?;
    let (plan, mut rows) = match plan_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let (dims, rotations) = parse_rotations(&text)?;
            let catalyst_axis = dims.len() - 1;
            let plan = TransformPlan {
                dims,
                cold_axis: 0,
                catalyst_axis,
                rotations,
                expected_cooling_current: 0.0,
                target_prefix: None,
            };
            (plan, Vec::new())
        }
        None => {
            let cert = parsed.certificate().ok_or_else(|| {
                Error::NoLoop("no single-current catalytic cooling exists".into())
            })?;
            let plan = parsed.plan(&cert)?;
            let rows: Vec<(&str, Cell)> = vec![
                ("chain_kind", cert.chain_kind.name().into()),
                ("i", (cert.i + 1).into()),
                ("l", (cert.l + 1).into()),
                ("l_prime", (cert.l_prime + 1).into()),
                (
                    "expected_cooling_current",
                    plan.expected_cooling_current.into(),
                ),
            ];
            (plan, rows)
        }
    };
    if let Some(out) = plan_out {
        std::fs::write(out, plan.to_text())?;
    }
    let (_, rep) = execute_plan(&state, &plan)?;
    rows.extend(report_rows(&rep));
    key_values(rows)
}

fn synthesis_rows(s: &SynthesizedCatalyst) -> Vec<(&'static str, Cell)> {
    let c = &s.certificate;
    vec![
        ("catalyst_dim", s.catalyst.dim().into()),
        ("ratio", s.ratio.into()),
        ("cooling_bound", s.cooling_bound.into()),
        ("chain_kind", c.chain_kind.name().into()),
        ("i", (c.i + 1).into()),
        ("l", (c.l + 1).into()),
        ("l_prime", (c.l_prime + 1).into()),
        ("loop_current", c.loop_current.into()),
        ("catalyst", joined(s.catalyst.probs())),
    ]
}

fn synthesize(pc: &str, ph: Option<&str>, ground: Option<usize>) -> Result<String, CliError> {
    let pc = parse_probs("pc", pc)?;
    let s = match (ph, ground) {
        (_, Some(g)) => synthesize_ground_catalyst(&pc, g)?,
        (Some(ph), None) => synthesize_catalyst(&pc, &parse_probs("ph", ph)?)?,
        (None, None) => return Err(CliError::Usage("give --ph or --ground".into())),
    };
    key_values(synthesis_rows(&s))
}

fn diagram(s: &Spectra, no_plan: bool) -> Result<String, CliError> {
    let parsed = Parsed::from(s)?;
    let plan = match (no_plan, parsed.certificate()) {
        (false, Some(c)) => Some(parsed.plan(&c)?),
        _ => None,
    };
    let d = match &parsed {
        Parsed::ColdHot(c, h, v) => diagram_export(c, h, v, plan.as_ref())?,
        Parsed::System(sys, v) => {
            diagram_export_joint(&[sys.probs()], &['s'], v.probs(), plan.as_ref())?
        }
    };
    Ok(d.to_csv())
}

fn optimal_qubit(
    p2c: &str,
    p2h: &str,
    n: &str,
    diagonal: bool,
    p2: &str,
) -> Result<String, CliError> {
    let ns = parse_usize_list("n", n)?;
    let rep = if diagonal {
        optimal_qubit_diagonal_sweep(&parse_grid("p2", p2)?, &ns)?
    } else {
        optimal_qubit_sweep(&parse_grid("p2c", p2c)?, &parse_grid("p2h", p2h)?, &ns)?
    };
    Ok(rep.to_csv())
}

fn enhance(
    mode: EnhanceMode,
    x: f64,
    y: f64,
    points: usize,
    p2c: Option<f64>,
    p1v: Option<f64>,
) -> Result<String, CliError> {
    match mode {
        EnhanceMode::Cold => Ok(enhancement_cold_sweep(x, points)?.to_csv()),
        EnhanceMode::Hot => Ok(enhancement_hot_sweep(y, points)?.to_csv()),
        EnhanceMode::Point => {
            let p2c = p2c.ok_or_else(|| CliError::Usage("--mode point needs --p2c".into()))?;
            let e = catalytic_enhancement_degenerate3(p2c, x, p1v)?;
            key_values(vec![
                ("p2c", e.p2c.into()),
                ("x", e.x.into()),
                ("p1v", e.p1v.into()),
                ("p1v_optimal", e.p1v_optimal.into()),
                ("J_cool", e.j_cool.into()),
                ("J_prime_cool_closed", e.j_prime_cool_closed.into()),
                ("J_prime_cool", e.j_prime_cool.into()),
                ("J_prime_res_L", e.j_prime_res_l.into()),
                ("J_prime_res_R", e.j_prime_res_r.into()),
                ("loop_mismatch", e.loop_mismatch.into()),
                ("p1c_initial", e.p1c_initial.into()),
                ("p1c_hot_only", e.p1c_hot_only.into()),
                ("p1c_final", e.p1c_final.into()),
            ])
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn mbc_vs_cc(
    n: Option<usize>,
    nc: Option<usize>,
    p2: Option<f64>,
    beta: Option<f64>,
    sweep: Option<MbcSweep>,
    kmax: usize,
    points: usize,
    betas: &str,
) -> Result<String, CliError> {
    match sweep {
        Some(MbcSweep::Xi) => {
            if points == 0 {
                return Err(CliError::Usage("--points must be positive".into()));
            }
            let grid: Vec<f64> = (1..=points)
                .map(|k| 0.5 * k as f64 / points as f64)
                .collect();
            Ok(xi_sweep(kmax, &grid)?.to_csv())
        }
        Some(MbcSweep::Gamma) => {
            let n = n.ok_or_else(|| CliError::Usage("--sweep gamma needs --N".into()))?;
            let b: Vec<f64> = betas
                .split(',')
                .map(|t| match t.trim() {
                    "inf" => Ok(f64::INFINITY),
                    v => v
                        .parse()
                        .map_err(|_| CliError::Usage(format!("--betas: '{v}' is not a number"))),
                })
                .collect::<Result<_, _>>()?;
            Ok(gamma_sweep(n, &b)?.to_csv())
        }
        None => {
            let (Some(n), Some(nc)) = (n, nc) else {
                return Err(CliError::Usage("give --N and --Nc, or --sweep".into()));
            };
            let p2 = match (p2, beta) {
                (Some(p), None) => p,
                (None, Some(b)) if b >= 0.0 => p2_from_beta(b),
                _ => return Err(CliError::Usage("give --p2 or a non-negative --beta".into())),
            };
            let p = QubitEnsembleParams::new(n, nc, p2)?;
            let r = performance_ratio(&p);
            let mut rep = SweepReport::new(&[
                "N",
                "Nc",
                "p2",
                "q_cc",
                "q_mbc_lower",
                "q_mbc_upper",
                "gamma",
                "is_exact",
                "regime",
                "boundary",
            ]);
            rep.push(vec![
                n.into(),
                nc.into(),
                p2.into(),
                r.q_cc.into(),
                r.q_mbc.lower.into(),
                r.q_mbc.upper.into(),
                r.gamma.into(),
                r.gamma_is_exact.into(),
                r.regime.label().into(),
                r.boundary.into(),
            ])?;
            Ok(rep.to_csv())
        }
    }
}

fn thermometry(
    ratio: f64,
    eps3: f64,
    p1v: Option<f64>,
    x: &str,
    units: Units,
    fd_check: bool,
) -> Outcome {
    let run = || -> Result<(String, Option<String>), CliError> {
        let xs = parse_grid("x", x)?;
        let u = match units {
            Units::Beta => ErrorUnits::InverseTemperature,
            Units::Temperature => ErrorUnits::Temperature,
        };
        let csv = thermometry_sweep(ratio, eps3, p1v, &xs, u)?.to_csv();
        let mut failure = None;
        if fd_check {
            for &xv in &xs {
                let v = p1v.unwrap_or_else(|| balanced_catalyst(ratio, xv));
                let s = ThermometrySetup::from_ratio(ratio, eps3, xv, v)?;
                let a = probe_after_optimal_swap(&s).dp1_dbeta;
                let b = sensitivity_after_catalytic(&s)?.dp1_dbeta;
                for (d, cat) in [(a, false), (b, true)] {
                    let fd = finite_difference_sensitivity(&s, cat, FD_STEP)?;
                    let rel = (fd - d).abs() / d.abs();
                    if rel > 1e-6 && failure.is_none() {
                        failure = Some(format!(
                            "finite differences differ by {rel:.3e} at x = {xv}"
                        ));
                    }
                }
            }
        }
        Ok((csv, failure))
    };
    match run() {
        Ok((csv, None)) => Ok(csv),
        Ok((csv, Some(msg))) => Err((CliError::Verification(msg), Some(csv))),
        Err(e) => Err((e, None)),
    }
}

fn oracle(check: &str, instances: usize, seed: u64) -> Outcome {
    let checks = if check == "all" {
        OracleCheck::ALL.to_vec()
    } else {
        vec![plain(OracleCheck::parse(check).map_err(CliError::from))?]
    };
    let mut rep = SweepReport::new(&["check", "instances", "seed", "disagreements", "max_error"]);
    let mut total = 0;
    for c in checks {
        let s = plain(run_oracle_check(c, instances, seed).map_err(CliError::from))?;
        total += s.disagreements;
        plain(
            rep.push(vec![
                c.name().into(),
                s.instances.into(),
                Cell::Int(seed as i64),
                s.disagreements.into(),
                s.max_error.into(),
            ])
            .map_err(CliError::from),
        )?;
    }
    let csv = rep.to_csv();
    if total > 0 {
        Err((
            CliError::Verification(format!("{total} oracle disagreements")),
            Some(csv),
        ))
    } else {
        Ok(csv)
    }
}
