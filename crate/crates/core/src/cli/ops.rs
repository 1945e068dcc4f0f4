//! One function per operation id; each turns a scenario into an [`Outcome`].

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::scenario::{run_scenario, Outcome, RunContext, Scenario};
use crate::blowup::{
    blowup_consistency_series, default_psi_family, nalpha_density, quadratic_inequality_check,
    quadratic_inequality_random, weak_star_average, BlowupSequence, TestDensity,
};
use crate::calculus::gauss_green::BoundaryPiece;
use crate::calculus::{
    gauss_green_residual, jensen_check, mollify, numeric_divergence, Axis, GridSpec, MollifierKernel, Omega,
    TestFunction,
};
use crate::fields::counterexample::counterexample_gamma;
use crate::fields::{
    field_from_registry, field_to_potential, make_counterexample_field, potential_to_field, CylindricalPotential,
    Gamma, PhiFunction, VectorField,
};
use crate::report::{Check, VerificationReport};
use crate::rigidity::{
    build_flow_tube, certify_potential, gamma_bounds, separable_demo, strip_identity_2d, CertificateVerdict,
    TubeOptions,
};
use crate::trace::{
    deviation_density, one_sided_ap_lim, weak_trace_ball_average, weak_trace_curvilinear, weak_trace_pairing,
    weak_trace_pairing_probe, weak_trace_sphere_flux, DensityOptions, DensityProbe, OrientedInterface, TraceProbe,
    EPS_DENSITY,
};
use crate::{Error, Result};

pub(crate) fn dispatch(sc: &Scenario, ctx: &RunContext) -> Result<Outcome> {
    match sc.operation.as_str() {
        "certify" => certify(sc),
        "gamma-bounds" => gamma_bounds_op(sc),
        "flow-tube" => flow_tube(sc),
        "strip-identity" => strip(sc),
        "trace" => trace(sc),
        "density" => density_op(sc, ctx),
        "aplim" => aplim(sc, ctx),
        "blowup" => blowup(sc),
        "nalpha" => nalpha(sc, ctx),
        "separable" => separable(sc),
        "quadratic" => quadratic(sc, ctx),
        "jensen" => jensen(sc, ctx),
        "potential-roundtrip" => potential_roundtrip(sc),
        "gauss-green" => gauss_green(sc),
        "suite" => suite(sc, ctx),
        other => Err(Error::UnknownScenario(format!("operation `{other}`"))),
    }
}

fn field_or(sc: &Scenario, default: &str) -> Result<VectorField> {
    field_from_registry(sc.field.as_deref().unwrap_or(default))
}

fn field_name<'a>(sc: &'a Scenario, default: &'a str) -> &'a str {
    sc.field.as_deref().unwrap_or(default)
}

/// `key=value` pairs after the first `:`-separated token.
fn spec_pairs(spec: &str) -> Result<(String, Vec<(String, f64)>)> {
    let mut parts = spec.trim().split(':');
    let head = parts.next().unwrap_or_default().to_string();
    let kv = parts
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("`{p}` in `{spec}` is not key=value")))?;
            let v = v
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("`{v}` in `{spec}` is not a number")))?;
            Ok((k.to_string(), v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((head, kv))
}

fn lookup(kv: &[(String, f64)], key: &str, default: f64) -> f64 {
    kv.iter().find(|(k, _)| k == key).map(|p| p.1).unwrap_or(default)
}

fn check_keys(spec: &str, kv: &[(String, f64)], allowed: &[&str]) -> Result<()> {
    match kv.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        Some((k, _)) => Err(Error::InvalidParameter(format!("unknown key `{k}` in `{spec}`"))),
        None => Ok(()),
    }
}

/// `line`, `circle:R=..:cx=..:cy=..` or `hyperplane:px=..:py=..:nx=..:ny=..`.
pub fn parse_interface(spec: &str) -> Result<OrientedInterface> {
    let (head, kv) = spec_pairs(spec)?;
    match head.as_str() {
        "line" | "x-axis" => {
            check_keys(spec, &kv, &[])?;
            Ok(OrientedInterface::x_axis_down())
        }
        "circle" => {
            check_keys(spec, &kv, &["R", "cx", "cy"])?;
            OrientedInterface::circle([lookup(&kv, "cx", 0.0), lookup(&kv, "cy", 0.0)], lookup(&kv, "R", 1.0))
        }
        "hyperplane" => {
            check_keys(spec, &kv, &["px", "py", "nx", "ny"])?;
            OrientedInterface::hyperplane(
                &[lookup(&kv, "px", 0.0), lookup(&kv, "py", 0.0)],
                &[lookup(&kv, "nx", 0.0), lookup(&kv, "ny", -1.0)],
            )
        }
        _ => Err(Error::InvalidParameter(format!("unknown interface `{spec}`"))),
    }
}

/// `unit-square`, `rect:x0=..:y0=..:x1=..:y1=..` or `disk:R=..:cx=..:cy=..`.
pub fn parse_omega(spec: &str) -> Result<Omega> {
    let (head, kv) = spec_pairs(spec)?;
    match head.as_str() {
        "unit-square" => {
            check_keys(spec, &kv, &[])?;
            Ok(Omega::unit_square())
        }
        "rect" => {
            check_keys(spec, &kv, &["x0", "y0", "x1", "y1"])?;
            let lo = [lookup(&kv, "x0", 0.0), lookup(&kv, "y0", 0.0)];
            let hi = [lookup(&kv, "x1", 1.0), lookup(&kv, "y1", 1.0)];
            if !(hi[0] > lo[0] && hi[1] > lo[1]) {
                return Err(Error::InvalidParameter(format!("empty rectangle `{spec}`")));
            }
            Ok(Omega::Rect { lo, hi })
        }
        "disk" => {
            check_keys(spec, &kv, &["R", "cx", "cy"])?;
            let radius = lookup(&kv, "R", 1.0);
            if !(radius > 0.0) {
                return Err(Error::InvalidParameter(format!("disk radius must be positive in `{spec}`")));
            }
            Ok(Omega::Disk {
                center: [lookup(&kv, "cx", 0.0), lookup(&kv, "cy", 0.0)],
                radius,
            })
        }
        _ => Err(Error::InvalidParameter(format!("unknown region `{spec}`"))),
    }
}

/// Capillary fields live on a disk whose boundary circle is the natural
/// interface; everything else defaults to the horizontal axis.
fn capillary_radius(field: &VectorField) -> Option<f64> {
    field.id.strip_prefix("capillary:R=").and_then(|r| r.parse().ok())
}

fn interface_for(sc: &Scenario, field: &VectorField) -> Result<OrientedInterface> {
    match sc.params().opt_string("interface")? {
        Some(s) => parse_interface(&s),
        None => match capillary_radius(field) {
            Some(r) => OrientedInterface::circle([0.0, 0.0], r),
            None => Ok(OrientedInterface::x_axis_down()),
        },
    }
}

fn x0_for(sc: &Scenario, field: &VectorField) -> Result<Vec<f64>> {
    let default = match capillary_radius(field) {
        Some(r) => vec![r, 0.0],
        None => vec![0.5, 0.0],
    };
    let x0 = sc.params().list("x0", &default)?;
    if x0.len() != field.dim {
        return Err(Error::InvalidParameter(format!("x0 needs {} coordinates", field.dim)));
    }
    Ok(x0)
}

/// Explicit `radii`, else `2^-k` for `k_lo..=k_hi`.
fn radii_for(sc: &Scenario, k_lo: i32, k_hi: i32) -> Result<Vec<f64>> {
    let p = sc.params();
    if let Some(r) = p.opt_list("radii")? {
        return Ok(r);
    }
    let (lo, hi) = (p.i32("k_lo", k_lo)?, p.i32("k_hi", k_hi)?);
    if lo > hi {
        return Err(Error::InvalidParameter(format!("empty k range {lo}..={hi}")));
    }
    Ok((lo..=hi).map(|k| 0.5f64.powi(k)).collect())
}

fn density_opts(sc: &Scenario, ctx: &RunContext) -> Result<DensityOptions> {
    let d = DensityOptions::default();
    let p = sc.params();
    Ok(DensityOptions {
        samples: p.usize("samples", d.samples)?,
        replicates: p.usize("replicates", d.replicates)?,
        seed: ctx.seed,
    })
}

fn phi_from(spec: &str) -> Result<PhiFunction> {
    let (head, kv) = spec_pairs(spec)?;
    match head.as_str() {
        "linear" => {
            check_keys(spec, &kv, &["c"])?;
            Ok(PhiFunction::linear(lookup(&kv, "c", 1.0)))
        }
        "quadratic" => {
            check_keys(spec, &kv, &["c"])?;
            Ok(PhiFunction::quadratic_with(lookup(&kv, "c", 0.5)))
        }
        _ => Err(Error::InvalidParameter(format!("unknown gauge `{spec}`"))),
    }
}

fn density_csv(p: &DensityProbe) -> String {
    let mut s = String::from("radius,ratio,stderr\n");
    for ((r, q), e) in p.radii.iter().zip(&p.ratios).zip(&p.stderr) {
        let _ = writeln!(s, "{r:.17e},{q:.17e},{e:.3e}");
    }
    s
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn counterexample_spec(name: &str) -> Result<Option<(usize, Gamma)>> {
    if !name.starts_with("counterexample") {
        return Ok(None);
    }
    let mut n = 4usize;
    let mut gamma = Gamma::Auto;
    for part in name.split(':').skip(1) {
        match part.split_once('=') {
            Some(("n", v)) => n = v.parse().map_err(|_| Error::UnknownField(name.into()))?,
            Some(("gamma", "auto" | "AUTO")) => gamma = Gamma::Auto,
            Some(("gamma", v)) => gamma = Gamma::Value(v.parse().map_err(|_| Error::UnknownField(name.into()))?),
            _ => return Err(Error::UnknownField(name.into())),
        }
    }
    Ok(Some((n, gamma)))
}

fn certify(sc: &Scenario) -> Result<Outcome> {
    let p = sc.params();
    let name = field_name(sc, "counterexample:n=4:gamma=auto");
    let grid = GridSpec::new(vec![
        Axis::log(p.f64("rho_lo", 1e-3)?, p.f64("rho_hi", 1e3)?, p.usize("rho_points", 200)?),
        Axis::uniform(p.f64("z_lo", -1.0)?, p.f64("z_hi", 10.0)?, p.usize("z_points", 200)?),
    ])?;
    let closed = counterexample_spec(name)?;
    let (potential, field) = match closed {
        Some((n, g)) => (CylindricalPotential::counterexample(n, g)?, make_counterexample_field(n, g)?),
        None => {
            let f = field_from_registry(name)?;
            (field_to_potential(&f)?, f)
        }
    };
    let cert = certify_potential(&potential, &grid, p.f64("c", 1.0)?)?;
    let mut rep = VerificationReport::new("certify");
    rep.insert("certificate", &cert);
    let tag = match cert.verdict {
        CertificateVerdict::CertifiedSampled => "CERTIFIED_SAMPLED",
        CertificateVerdict::Violated => "VIOLATED",
    };
    rep.set_status(tag);
    let mut csv = String::from("condition,min_margin,rho,z\n");
    for c in &cert.conditions {
        let _ = writeln!(csv, "{},{:.17e},{:.17e},{:.17e}", c.name, c.min_margin, c.argmin_point[0], c.argmin_point[1]);
    }
    match p.string("expect", "certified")?.as_str() {
        "certified" => {
            for c in &cert.conditions {
                rep.push(Check::at_least(format!("margin_{}", c.name), c.min_margin, sc.tol("margin", -1e-12)));
            }
        }
        "violated" => {
            rep.push(Check::flag("violated", !cert.certified()));
            rep.push(Check::flag("witness_present", cert.witness.is_some()));
        }
        other => return Err(Error::InvalidParameter(format!("expect must be certified or violated, got `{other}`"))),
    }

    if let Some((n, g)) = closed {
        let gamma = counterexample_gamma(n, g)?;
        let mut axis = vec![0.0; n];
        axis[n - 1] = 1.0;
        let v = field.eval(&axis)?;
        rep.insert("gamma", gamma);
        rep.push(Check::near("abs_eta_on_axis_z1", norm(&v), gamma * PI / 4.0, sc.tol("axis_value", 1e-12)));

        let samples = p.usize("divergence_samples", 1000)?;
        let h = p.f64("fd_step", 1e-4)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x00d1_5e7f);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            // rho and z at least 0.05, well clear of both exclusion sets
            let rho = 0.05 + 2.95 * rng.random::<f64>();
            let z = 0.05 + 2.95 * rng.random::<f64>();
            let dir: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>() - 0.5).collect();
            let len = norm(&dir).max(1e-3);
            let mut x: Vec<f64> = dir.iter().map(|d| rho * d / len).collect();
            x.push(z);
            worst = worst.max(numeric_divergence(&field, &x, h)?.abs());
        }
        rep.push(Check::at_most("fd_divergence", worst, sc.tol("divergence", 1e-6)));
    }
    let mut out = Outcome::new(rep);
    out.csv.push(("conditions".into(), csv));
    Ok(out)
}

fn gamma_bounds_op(sc: &Scenario) -> Result<Outcome> {
    let p = sc.params();
    let n = p.usize("n", 4)?;
    let (b1, b2) = gamma_bounds(n)?;
    let mut rep = VerificationReport::new("gamma_bounds");
    rep.insert("n", n).insert("bounds", [b1, b2]);
    if n == 4 {
        let c1 = 2.0 / (PI + 3f64.powf(0.75));
        let c2 = 2f64.powf(-8.0 / 3.0);
        rep.push(Check::near("bound_1", b1, c1, sc.tol("digits", 1e-12) * c1));
        rep.push(Check::near("bound_2", b2, c2, sc.tol("digits", 1e-12) * c2));
    }
    let g = p.f64("gamma_test", 1.0)?;
    let pot = CylindricalPotential::counterexample(n, Gamma::Value(g))?;
    let cert = certify_potential(&pot, &crate::rigidity::default_certification_grid(), 1.0)?;
    rep.insert("gamma_test", g).insert("witness", &cert.witness);
    let over = g > b1.min(b2);
    rep.push(Check::flag("verdict_matches_bounds", cert.certified() != over));
    if over {
        rep.push(Check::flag("witness_present", cert.witness.is_some()));
    }
    Ok(Outcome::new(rep))
}

fn flow_tube(sc: &Scenario) -> Result<Outcome> {
    let p = sc.params();
    let eta = field_or(sc, "stream3:bump")?;
    let n = eta.dim;
    let (lo_d, hi_d): (Vec<f64>, Vec<f64>) = if n == 3 {
        (vec![-0.5, -0.6], vec![0.5, 0.3])
    } else {
        (vec![-0.5; n - 1], vec![0.5; n - 1])
    };
    let a_lo = p.list("a_lo", &lo_d)?;
    let a_hi = p.list("a_hi", &hi_d)?;
    let h0 = p.f64("h0", 2.0)?;
    let epsilon = match p.opt_f64("epsilon")? {
        Some(e) => e,
        None => p.f64("eps_factor", 2.0)? * eta.sup_bound.max(f64::MIN_POSITIVE),
    };
    let opts = TubeOptions {
        seeds_per_axis: p.usize("seeds", 64)?,
        panel_order: p.usize("panel_order", 2)?,
        linear_gauge: p.opt_f64("gauge")?,
        record_trajectories: p.usize("trajectories", 0)?,
        ..TubeOptions::default()
    };
    let tube = build_flow_tube(&eta, epsilon, &a_lo, &a_hi, h0, &opts)?;
    let mut rep = VerificationReport::new("flow_tube");
    rep.insert("field", &eta.id);
    rep.push(Check::at_most("residual", tube.residual, sc.tol("residual", 1e-6)));
    let mut csv = Vec::new();
    if opts.record_trajectories > 0 {
        csv.push(("trajectories".to_string(), tube.trajectories_csv()));
    }
    let mut refinement = format!("seeds_per_axis,residual\n{},{:.17e}\n", opts.seeds_per_axis, tube.residual);
    let residual = tube.residual;
    rep.absorb("tube", tube.report());

    if p.bool("refine", false)? {
        let fine_opts = TubeOptions {
            seeds_per_axis: 2 * opts.seeds_per_axis,
            record_trajectories: 0,
            ..opts
        };
        let fine = build_flow_tube(&eta, epsilon, &a_lo, &a_hi, h0, &fine_opts)?;
        let _ = writeln!(refinement, "{},{:.17e}", fine_opts.seeds_per_axis, fine.residual);
        let ratio = if fine.residual > 0.0 { residual / fine.residual } else { f64::INFINITY };
        rep.insert("refined_residual", fine.residual);
        rep.push(Check::at_least("refinement_ratio", ratio, sc.tol("refinement_ratio", 4.0)));
    }
    if p.bool("zero_control", false)? {
        let zero = build_flow_tube(&VectorField::zero(n), epsilon, &a_lo, &a_hi, h0, &opts)?;
        rep.push(Check::at_most("zero_field_residual", zero.residual, 0.0));
    }
    csv.push(("refinement".into(), refinement));
    Ok(Outcome { report: rep, csv })
}

fn strip(sc: &Scenario) -> Result<Outcome> {
    let p = sc.params();
    let eta = field_or(sc, "stream:bump")?;
    let pairs = match (p.opt_f64("r")?, p.opt_f64("t")?) {
        (Some(r), Some(t)) => vec![vec![r, t]],
        (None, None) => p.rows("pairs", 2, &[vec![5.0, 3.0], vec![2.0, 1.0]])?,
        _ => return Err(Error::InvalidParameter("give both r and t, or pairs".into())),
    };
    let phi = p.opt_string("phi")?.map(|s| phi_from(&s)).transpose()?;
    let mut rep = VerificationReport::new("strip_identity");
    rep.insert("field", &eta.id);
    let mut csv = String::from("r,t,lhs,rhs,residual\n");
    for pair in pairs {
        let (r, t) = (pair[0], pair[1]);
        let sub = strip_identity_2d(&eta, r, t, phi.as_ref())?;
        let get = |k: &str| sub.data.get(k).and_then(Value::as_f64).unwrap_or(f64::NAN);
        let _ = writeln!(csv, "{r},{t},{:.17e},{:.17e},{:.3e}", get("lhs"), get("rhs"), (get("lhs") - get("rhs")).abs());
        rep.absorb(&format!("r={r},t={t}"), sub);
    }
    let mut out = Outcome::new(rep);
    out.csv.push(("strip".into(), csv));
    Ok(out)
}

const METHODS: [&str; 4] = ["ball-average", "curvilinear", "sphere-flux", "pairing"];

fn probe(method: &str, f: &VectorField, s: &OrientedInterface, x0: &[f64], radii: &[f64], rho: f64) -> Result<TraceProbe> {
    match method {
        "ball-average" => weak_trace_ball_average(f, s, x0, radii),
        "curvilinear" => weak_trace_curvilinear(f, s, x0, rho, radii),
        "sphere-flux" => weak_trace_sphere_flux(f, s, x0, radii),
        "pairing" => weak_trace_pairing_probe(f, s, x0, radii),
        other => Err(Error::InvalidParameter(format!(
            "unknown trace method `{other}` (use {} or all)",
            METHODS.join(", ")
        ))),
    }
}

/// `count` bumps centered at equal arclength steps along the boundary of `omega`.
fn boundary_bumps(omega: &Omega, count: usize, radius: f64) -> Vec<TestFunction> {
    let pieces: Vec<BoundaryPiece> = omega.boundary();
    let total: f64 = pieces.iter().map(BoundaryPiece::length).sum();
    (0..count)
        .map(|j| {
            let mut s = (j as f64 + 0.5) * total / count as f64;
            let mut center = [0.0; 2];
            for piece in &pieces {
                if s <= piece.length() {
                    center = piece.at(s).0;
                    break;
                }
                s -= piece.length();
            }
            TestFunction::bump(&center, radius)
        })
        .collect()
}

fn trace(sc: &Scenario) -> Result<Outcome> {
    let p = sc.params();
    let f = field_or(sc, "capillary:R=1")?;
    let method = p.string("method", "all")?;
    let mut rep = VerificationReport::new("trace");
    rep.insert("field", &f.id);
    let mut out_csv = Vec::new();

    if let Some(omega_spec) = p.opt_string("omega")? {
        if method != "pairing" {
            return Err(Error::InvalidParameter("`omega` applies to the pairing method only".into()));
        }
        let omega = parse_omega(&omega_spec)?;
        let psis = boundary_bumps(&omega, p.usize("bumps", 10)?, p.f64("bump_radius", 0.25)?);
        let values = weak_trace_pairing(&f, &omega, &psis)?;
        let tol = sc.tol("pairing", 1e-6);
        let mut csv = String::from("bump,center_x,center_y,pairing,c1_norm\n");
        for (j, (psi, v)) in psis.iter().zip(&values).enumerate() {
            let c1 = psi.c1_norm();
            let c = psi.support().map(|s| s.0).unwrap_or_default();
            let _ = writeln!(csv, "{j},{:.6},{:.6},{v:.6e},{c1:.6e}", c[0], c[1]);
            rep.push(Check::at_most(format!("pairing[{j}]"), v.abs(), tol * c1));
        }
        rep.insert("omega", omega_spec).insert("pairings", &values);
        out_csv.push(("pairing".into(), csv));
        return Ok(Outcome {
            report: rep,
            csv: out_csv,
        });
    }

    let s = interface_for(sc, &f)?;
    let x0 = x0_for(sc, &f)?;
    let radii = radii_for(sc, 3, 10)?;
    let rho = p.f64("rho", 0.1)?;
    let expected = p.opt_f64("expected")?;
    let compare = p.opt_list("compare_radii")?;
    let methods: Vec<&str> = if method == "all" { METHODS.to_vec() } else { vec![method.as_str()] };
    rep.insert("interface", s.label()).insert("x0", &x0);
    for m in methods {
        let pr = probe(m, &f, &s, &x0, &radii, rho)?;
        if let Some(t) = expected {
            rep.push(Check::near(format!("{m}.extrapolated"), pr.extrapolated, t, sc.tol("trace", 1e-2)));
        }
        rep.push(Check::flag(format!("{m}.finite"), pr.estimates.iter().all(|e| e.is_finite())));
        if let Some(other) = &compare {
            let second = probe(m, &f, &s, &x0, other, rho)?;
            let gap = pr
                .estimates
                .iter()
                .zip(&second.estimates)
                .map(|(a, b)| (a - b).abs())
                .fold(f64::INFINITY, f64::min);
            rep.insert(&format!("{m}.compare"), &second);
            rep.push(Check::at_least(format!("{m}.subsequence_gap"), gap, sc.tol("min_gap", 0.01)));
            out_csv.push((format!("{m}-compare"), second.to_csv()));
        }
        out_csv.push((m.to_string(), pr.to_csv()));
        rep.insert(m, &pr);
    }
    Ok(Outcome {
        report: rep,
        csv: out_csv,
    })
}

fn density_op(sc: &Scenario, ctx: &RunContext) -> Result<Outcome> {
    let p = sc.params();
    let f = field_or(sc, "capillary:R=1")?;
    let s = interface_for(sc, &f)?;
    let x0 = x0_for(sc, &f)?;
    let nu = s.normal_at(&x0)?;
    let w = p.list("w", &nu)?;
    let alpha = p.f64("alpha", 0.1)?;
    let radii = radii_for(sc, 5, 8)?;
    let probe = deviation_density(&f, &nu, &x0, &w, alpha, &radii, &density_opts(sc, ctx)?)?;
    let mut rep = VerificationReport::new("density");
    rep.insert("field", &f.id).insert("w", &w).insert("alpha", alpha).insert("probe", &probe);
    let last = *probe.ratios.last().expect("nonempty radii");
    if let Some(m) = p.opt_f64("max_theta")? {
        rep.push(Check::at_most("theta", probe.theta, m));
        rep.push(Check::at_most("smallest_radius_ratio", last, m));
    }
    if let Some(m) = p.opt_f64("min_ratio")? {
        rep.push(Check::at_least("smallest_radius_ratio_floor", last, m));
    }
    let mut out = Outcome::new(rep);
    out.csv.push(("density".into(), density_csv(&probe)));
    Ok(out)
}

fn aplim(sc: &Scenario, ctx: &RunContext) -> Result<Outcome> {
    let p = sc.params();
    let f = field_or(sc, "capillary:R=1")?;
    let s = interface_for(sc, &f)?;
    let x0 = x0_for(sc, &f)?;
    let nu = s.normal_at(&x0)?;
    let w = p.list("w", &nu)?;
    let alphas = p.list("alphas", &[0.2, 0.1, 0.05])?;
    let radii = radii_for(sc, 5, 8)?;
    let eps = p.f64("eps_density", EPS_DENSITY)?;
    let mut rep = one_sided_ap_lim(&f, &s, &x0, &w, &alphas, &radii, eps, &density_opts(sc, ctx)?)?;
    if let Some(expect) = p.opt_string("expect")? {
        let want = match expect.as_str() {
            "confirmed" => "AP_LIM_CONFIRMED",
            "rejected" => "AP_LIM_REJECTED",
            "inconclusive" => "INCONCLUSIVE",
            other => return Err(Error::InvalidParameter(format!("unknown expectation `{other}`"))),
        };
        rep.push(Check::flag(format!("status_is_{expect}"), rep.status.as_deref() == Some(want)));
    }
    Ok(Outcome::new(rep))
}

fn blowup(sc: &Scenario) -> Result<Outcome> {
    let p = sc.params();
    let f = field_or(sc, "capillary:R=1")?;
    let s = interface_for(sc, &f)?;
    let x0 = x0_for(sc, &f)?;
    let seq = BlowupSequence::dyadic(&f, &x0, p.i32("k_lo", 2)?, p.i32("k_hi", 8)?)?;
    let nu = s.normal_at(&x0)?;
    let series = blowup_consistency_series(&seq, &s, &default_psi_family([nu[0], nu[1]]), p.opt_f64("trace_value")?)?;
    let mut rep = VerificationReport::new("blowup");
    rep.insert("field", &f.id);
    let csv = series.to_csv();
    rep.absorb("consistency", series.report());
    if p.bool("weak_star", true)? {
        let center: Vec<f64> = nu.iter().map(|v| -v).collect();
        let probe = weak_star_average(&seq, &[TestDensity::bump(&center, 0.5)?])?;
        if let Some(limit) = p.opt_list("limit")? {
            let got = &probe.limits[0];
            let dev = got.iter().zip(&limit).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            rep.push(Check::at_most("weak_star_limit", dev, sc.tol("limit", 1e-6)));
        }
        rep.absorb("weak_star", probe.report());
    }
    let mut out = Outcome::new(rep);
    out.csv.push(("series".into(), csv));
    Ok(out)
}

fn nalpha(sc: &Scenario, ctx: &RunContext) -> Result<Outcome> {
    let p = sc.params();
    let f = field_or(sc, "capillary:R=1")?;
    let s = interface_for(sc, &f)?;
    let x0 = x0_for(sc, &f)?;
    let radii = radii_for(sc, 5, 8)?;
    let probe = nalpha_density(&f, &s, &x0, p.f64("alpha", 0.1)?, &radii, &density_opts(sc, ctx)?)?;
    let last = *probe.density.ratios.last().expect("nonempty radii");
    let mut rep = VerificationReport::new("nalpha");
    rep.insert("field", &f.id).insert("probe", &probe);
    if let Some(m) = p.opt_f64("max_ratio")? {
        rep.push(Check::at_most("smallest_radius_ratio", last, m));
    }
    if let Some(m) = p.opt_f64("min_ratio")? {
        rep.push(Check::at_least("smallest_radius_ratio_floor", last, m));
    }
    let mut out = Outcome::new(rep);
    out.csv.push(("density".into(), density_csv(&probe.density)));
    Ok(out)
}

fn separable(sc: &Scenario) -> Result<Outcome> {
    let p = sc.params();
    let single = [p.opt_f64("gamma")?, p.opt_f64("rho0")?, p.opt_f64("psi0")?];
    let triples = if single.iter().any(Option::is_some) {
        vec![vec![single[0].unwrap_or(1.0), single[1].unwrap_or(1.0), single[2].unwrap_or(1.0)]]
    } else {
        p.rows("triples", 3, &[vec![1.0, 1.0, 1.0], vec![2.0, 1.0, 1.0], vec![0.5, 2.0, 1.0]])?
    };
    let mut rep = VerificationReport::new("separable");
    let mut csv = String::from("gamma,rho0,psi0,rho_star,numeric_blowup_radius\n");
    for t in &triples {
        let sub = separable_demo(t[0], t[1], t[2])?;
        let get = |k: &str| sub.data.get(k).and_then(Value::as_f64).unwrap_or(f64::NAN);
        let _ = writeln!(csv, "{},{},{},{:.17e},{:.17e}", t[0], t[1], t[2], get("rho_star"), get("numeric_blowup_radius"));
        if triples.len() == 1 {
            rep.status = sub.status.clone();
        }
        rep.absorb(&format!("gamma={},rho0={},psi0={}", t[0], t[1], t[2]), sub);
    }
    let mut out = Outcome::new(rep);
    out.csv.push(("blowup".into(), csv));
    Ok(out)
}

fn quadratic(sc: &Scenario, ctx: &RunContext) -> Result<Outcome> {
    let p = sc.params();
    let mut rep = VerificationReport::new("quadratic");
    rep.absorb(
        "random",
        quadratic_inequality_random(p.usize("dim", 2)?, p.usize("samples", 10_000)?, ctx.seed)?,
    );
    if let Some(name) = &sc.field {
        let f = field_from_registry(name)?;
        let lo = p.list("grid_lo", &vec![-1.0; f.dim])?;
        let hi = p.list("grid_hi", &vec![1.0; f.dim])?;
        let grid = GridSpec::uniform_box(&lo, &hi, p.usize("grid_points", 41)?)?;
        rep.absorb("field", quadratic_inequality_check(&f, &grid)?);
    }
    Ok(Outcome::new(rep))
}

fn jensen(sc: &Scenario, ctx: &RunContext) -> Result<Outcome> {
    let p = sc.params();
    let f = field_or(sc, "constant:c=0,1")?;
    let phi = phi_from(&p.string("phi", "quadratic")?)?;
    let eps = p.f64("epsilon", 0.25)?;
    let kernel = MollifierKernel::new(f.dim, eps)?;
    let lo = p.list("grid_lo", &vec![-1.0; f.dim])?;
    let hi = p.list("grid_hi", &vec![1.0; f.dim])?;
    let grid = GridSpec::uniform_box(&lo, &hi, p.usize("grid_points", 11)?)?;
    let mut rep = VerificationReport::new("jensen");
    let sub = jensen_check(&f, &phi, &kernel, &grid)?;
    if let Some(c) = sub.check("min_margin") {
        rep.push(Check::at_least("jensen_min_margin", c.value, sc.tol("jensen", -1e-6)));
    }
    rep.absorb("jensen", sub);

    let g = field_from_registry(&p.string("mollify_field", "stream:bump")?)?;
    let smooth = mollify(&g, &MollifierKernel::new(g.dim, eps)?, false)?;
    let h = p.f64("fd_step", 1e-4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst = 0.0f64;
    for _ in 0..p.usize("divergence_samples", 200)? {
        // a box around the default bump, which sits at (0, 2) with radius 1
        let x: Vec<f64> = (0..g.dim)
            .map(|i| if i + 1 == g.dim { 0.5 + 3.0 * rng.random::<f64>() } else { -1.5 + 3.0 * rng.random::<f64>() })
            .collect();
        worst = worst.max(numeric_divergence(&smooth, &x, h)?.abs());
    }
    rep.insert("mollified_field", &g.id);
    rep.push(Check::at_most("mollified_divergence", worst, sc.tol("divergence", 1e-6)));
    Ok(Outcome::new(rep))
}

fn potential_roundtrip(sc: &Scenario) -> Result<Outcome> {
    let p = sc.params();
    let n = p.usize("n", 4)?;
    let gamma = match p.opt_f64("gamma")? {
        Some(g) => Gamma::Value(g),
        None => Gamma::Auto,
    };
    let closed = CylindricalPotential::counterexample(n, gamma)?;
    let eta = make_counterexample_field(n, gamma)?;
    let recovered = field_to_potential(&eta)?;
    let rebuilt = potential_to_field(&closed)?;
    let m = p.usize("grid_points", 50)?;
    let grid = GridSpec::new(vec![
        Axis::uniform(p.f64("rho_lo", 0.1)?, p.f64("rho_hi", 3.0)?, m),
        Axis::uniform(p.f64("z_lo", 0.1)?, p.f64("z_hi", 3.0)?, m),
    ])?;
    let mut dv = 0.0f64;
    let mut df = 0.0f64;
    for q in grid.points() {
        let (rho, z) = (q[0], q[1]);
        dv = dv.max((recovered.value(rho, z) - closed.value(rho, z)).abs());
        let mut x = vec![0.0; n];
        x[0] = rho;
        x[n - 1] = z;
        let a = rebuilt.eval(&x)?;
        let b = eta.eval(&x)?;
        df = df.max(a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max));
    }
    let mut rep = VerificationReport::new("potential_roundtrip");
    rep.insert("n", n).insert("grid_points", grid.len());
    rep.push(Check::at_most("potential_deviation", dv, sc.tol("potential", 1e-8)));
    rep.push(Check::at_most("field_deviation", df, sc.tol("field", 1e-12)));
    Ok(Outcome::new(rep))
}

fn gauss_green(sc: &Scenario) -> Result<Outcome> {
    let p = sc.params();
    let f = field_or(sc, "capillary:R=1")?;
    let omega = match p.opt_string("omega")? {
        Some(s) => parse_omega(&s)?,
        None => match capillary_radius(&f) {
            Some(r) => Omega::Disk {
                center: [0.0, 0.0],
                radius: r,
            },
            None => Omega::unit_square(),
        },
    };
    let psi = match p.opt_string("psi")?.as_deref() {
        None | Some("constant") => TestFunction::constant(1.0),
        Some(spec) => {
            let (head, kv) = spec_pairs(spec)?;
            check_keys(spec, &kv, &["cx", "cy", "r"])?;
            if head != "bump" {
                return Err(Error::InvalidParameter(format!("unknown test function `{spec}`")));
            }
            TestFunction::bump(&[lookup(&kv, "cx", 0.0), lookup(&kv, "cy", 0.0)], lookup(&kv, "r", 0.5))
        }
    };
    let g = gauss_green_residual(&f, &omega, &psi)?;
    let mut rep = VerificationReport::new("gauss_green");
    rep.insert("field", &f.id).insert("terms", g);
    rep.push(Check::at_most("residual", g.residual.abs(), sc.tol("residual", 1e-8)));
    if let Some(e) = p.opt_f64("expected")? {
        let tol = sc.tol("expected", 1e-6);
        rep.push(Check::near("div_term", g.div_term, e, tol));
        rep.push(Check::near("boundary_term", g.boundary_term, e, tol));
    }
    Ok(Outcome::new(rep))
}

pub(crate) fn suite_steps(sc: &Scenario) -> Result<Vec<Scenario>> {
    let steps = sc
        .params
        .get("steps")
        .ok_or_else(|| Error::InvalidParameter("suite needs `steps`".into()))?;
    let steps: Vec<Scenario> = serde_json::from_value(steps.clone())?;
    if steps.is_empty() {
        return Err(Error::InvalidParameter("suite needs at least one step".into()));
    }
    Ok(steps)
}

/// Runs every step and folds the results under the step names.
fn suite(sc: &Scenario, ctx: &RunContext) -> Result<Outcome> {
    let mut rep = VerificationReport::new("suite");
    let mut csv = Vec::new();
    for mut step in suite_steps(sc)? {
        for (k, v) in &sc.tolerances {
            step.tolerances.entry(k.clone()).or_insert(*v);
        }
        let out = run_scenario(&step, ctx)?;
        for (suffix, body) in out.csv {
            csv.push((format!("{}-{suffix}", step.name), body));
        }
        rep.absorb(&step.name, out.report);
    }
    Ok(Outcome { report: rep, csv })
}
