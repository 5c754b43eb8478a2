//! Elimination chain `L1, L2 -> L3 -> L4, L5 -> L6`, conformance with the
//! coefficient-structure table, wave propagation and the compatibility check
//! `L6 ~ T(L1)`.

use rand::Rng;

use crate::curves::{build_family, exact_divide, BiPoly, CurveCondition, DIMENSION_TOL};
use crate::dynamics::{elliptic_step, PainleveState};
use crate::error::{Error, Result};
use crate::lax::{
    build_f32, build_l1, build_l2, build_phi32, build_phi54, LaxBuild, LaxOperator, Slot, Waves,
};
use crate::numerics::{c64, projective_distance, C64};
use crate::surface::{EllipticData, SurfacePoint};

/// Largest divisibility residual accepted inside the chain.
pub const CHAIN_TOL: f64 = 1e-8;

/// Eliminates `kill` from two operators sharing it, then divides every
/// coefficient by `divisor`. Returns the operator and the largest relative
/// division residual.
pub fn eliminate(
    a: &LaxOperator,
    b: &LaxOperator,
    kill: Slot,
    divisor: &BiPoly,
) -> Result<(LaxOperator, f64)> {
    let ak = a
        .coeff(kill)
        .ok_or_else(|| Error::invalid(format!("first operator lacks {kill}")))?;
    let bk = b
        .coeff(kill)
        .ok_or_else(|| Error::invalid(format!("second operator lacks {kill}")))?;
    let mut slots: Vec<Slot> = Vec::new();
    for s in a.slots.iter().chain(&b.slots) {
        if *s != kill && !slots.contains(s) {
            slots.push(*s);
        }
    }
    if slots.len() != 3 {
        return Err(Error::invalid(format!(
            "elimination leaves {} slots",
            slots.len()
        )));
    }
    let mut coeffs = Vec::with_capacity(3);
    let mut worst: f64 = 0.0;
    for s in &slots {
        let mut combo = BiPoly::zeros(0, 0);
        if let Some(ca) = a.coeff(*s) {
            combo = combo.add(&bk.mul(ca));
        }
        if let Some(cb) = b.coeff(*s) {
            combo = combo.sub(&ak.mul(cb));
        }
        let (m, n) = (ak.m() + a.coeffs[0].m(), ak.n() + a.coeffs[0].n());
        let combo = combo.padded(m.max(combo.m()), n.max(combo.n()));
        let (q, r) = exact_divide(&combo, divisor)?;
        worst = worst.max(r);
        coeffs.push(q);
    }
    let op = LaxOperator {
        slots: [slots[0], slots[1], slots[2]],
        coeffs: [coeffs[0].clone(), coeffs[1].clone(), coeffs[2].clone()],
    }
    .normalized();
    Ok((op, worst))
}

/// `L1` and `L2` at `z - delta`, `z`, `z + delta` (index 0, 1, 2).
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub z: C64,
    pub l1: [LaxBuild; 3],
    pub l2: [LaxBuild; 3],
}

impl OperatorSet {
    pub fn build(d: &EllipticData, z: C64) -> Result<Self> {
        let delta = d.delta();
        let zs = [z - delta, z, z + delta];
        let l1 = [
            build_l1(d, zs[0])?,
            build_l1(d, zs[1])?,
            build_l1(d, zs[2])?,
        ];
        let l2 = [
            build_l2(d, zs[0])?,
            build_l2(d, zs[1])?,
            build_l2(d, zs[2])?,
        ];
        Ok(Self { z, l1, l2 })
    }
}

/// Output of the elimination chain.
#[derive(Debug, Clone)]
pub struct Chain {
    pub l3: LaxOperator,
    pub l3_below: LaxOperator,
    pub l4: LaxOperator,
    pub l5: LaxOperator,
    pub l6: LaxOperator,
    /// Division residuals of steps 1 to 4 (step 1 also at `z - delta`).
    pub step_residuals: Vec<(String, f64)>,
}

fn f_line(d: &EllipticData, u: C64) -> BiPoly {
    BiPoly::f_minus(d.f_u(u))
}

/// First elimination at base `w`: eliminate `y(w - delta)` from `L1(w)`, `L2(w)`.
fn step1(
    d: &EllipticData,
    phi: &BiPoly,
    l1: &LaxOperator,
    l2: &LaxOperator,
    w: C64,
) -> Result<(LaxOperator, f64)> {
    let div = phi.mul(&f_line(d, w - d.delta()));
    eliminate(l1, l2, Slot::Y(-1), &div)
}

/// Runs steps 1 to 4 at spectral parameter `z`.
pub fn run_chain(d: &EllipticData, ops: &OperatorSet) -> Result<Chain> {
    let z = ops.z;
    let delta = d.delta();
    let phi = d.phi22()?;
    let f1 = f_line(d, d.u[0]);
    let (l3, r1) = step1(d, &phi, &ops.l1[1].op, &ops.l2[1].op, z)?;
    let (l3_below, r1b) = step1(d, &phi, &ops.l1[0].op, &ops.l2[0].op, z - delta)?;
    let (l4, r2) = eliminate(
        &ops.l2[1].op,
        &l3_below.shifted(-1),
        Slot::Y(-1),
        &f_line(d, z - delta),
    )?;
    let (l5, r3) = eliminate(&ops.l2[2].op.shifted(1), &l3, Slot::Y(1), &f_line(d, z))?;
    let (l6, r4) = eliminate(&l4, &l5, Slot::Y(0), &f1.mul(&phi))?;
    let step_residuals = vec![
        ("step1".to_string(), r1),
        ("step1_shifted".to_string(), r1b),
        ("step2".to_string(), r2),
        ("step3".to_string(), r3),
        ("step4".to_string(), r4),
    ];
    for (name, r) in &step_residuals {
        if *r > CHAIN_TOL {
            return Err(Error::Elimination {
                step: name.clone(),
                residual: *r,
            });
        }
    }
    Ok(Chain {
        l3,
        l3_below,
        l4,
        l5,
        l6,
        step_residuals,
    })
}

/// Reference for one coefficient entry of the structure table.
enum Reference {
    /// Coefficient is a constant multiple of this polynomial.
    Factor(BiPoly),
    /// Coefficient satisfies these conditions.
    Conditions(Vec<CurveCondition>),
}

/// Residuals of one table entry.
#[derive(Debug, Clone)]
pub struct TableEntry {
    pub name: String,
    pub divisor_residual: f64,
    pub zero_residual: f64,
}

fn entry(
    d: &EllipticData,
    name: &str,
    coeff: &BiPoly,
    reference: Reference,
    zeros: &[C64],
) -> Result<TableEntry> {
    let divisor_residual = match reference {
        Reference::Factor(p) => {
            if p.m() > coeff.m() || p.n() > coeff.n() {
                return Err(Error::invalid(format!(
                    "{name}: reference exceeds the coefficient bidegree"
                )));
            }
            exact_divide(coeff, &p)?.1
        }
        Reference::Conditions(conds) => conds.iter().map(|c| c.residual(coeff)).fold(0.0, f64::max),
    };
    let mut zero_residual: f64 = 0.0;
    for &u in zeros {
        zero_residual = zero_residual.max(coeff.relative_eval_at(&d.point(u)?));
    }
    Ok(TableEntry {
        name: name.to_string(),
        divisor_residual,
        zero_residual,
    })
}

fn coeff<'a>(op: &'a LaxOperator, slot: Slot, name: &str) -> Result<&'a BiPoly> {
    op.coeff(slot)
        .ok_or_else(|| Error::invalid(format!("{name} has no slot {slot}")))
}

/// Conditions `P1^5 P2 P3^3..P8^3 P_{z + delta - u1 + u2}` of the (7,6) family.
pub fn l6_conditions(d: &EllipticData, z: C64) -> Result<Vec<CurveCondition>> {
    let pts = d.base_points()?;
    let mut conds = vec![
        CurveCondition::Multiplicity(pts[0].clone(), 5),
        CurveCondition::Vanish(pts[1].clone()),
    ];
    conds.extend(
        pts[2..]
            .iter()
            .cloned()
            .map(|p| CurveCondition::Multiplicity(p, 3)),
    );
    conds.push(CurveCondition::Vanish(
        d.point(z + d.delta() - d.u[0] + d.u[1])?,
    ));
    Ok(conds)
}

/// All eighteen entries of the table (six operators, three slots each).
pub fn table_conformance(
    d: &EllipticData,
    ops: &OperatorSet,
    chain: &Chain,
) -> Result<Vec<TableEntry>> {
    let z = ops.z;
    let (delta, h1) = (d.delta(), d.h1);
    let (u1, u2) = (d.u[0], d.u[1]);
    let zb = z - delta;
    let phi = d.phi22()?;
    let line = |u: C64| f_line(d, u).mul(&phi);
    let f1phi2 = f_line(d, u1).mul(&phi).mul(&phi);
    let l1 = &ops.l1[1].op;
    let l2 = &ops.l2[1].op;
    let (l3, l4, l5, l6) = (&chain.l3, &chain.l4, &chain.l5, &chain.l6);
    use Reference::{Conditions, Factor};
    let s = u2 - u1;
    let rows: Vec<(&str, &LaxOperator, Slot, Reference, Vec<C64>)> = vec![
        ("L1 y(-)", l1, Slot::Y(-1), Factor(line(z)), vec![z, h1 - z]),
        (
            "L1 y",
            l1,
            Slot::Y(0),
            Factor(build_phi32(d, z)?),
            vec![z, h1 + delta - z],
        ),
        (
            "L1 y(+)",
            l1,
            Slot::Y(1),
            Factor(line(zb)),
            vec![zb, h1 + delta - z],
        ),
        ("L2 y(-)", l2, Slot::Y(-1), Factor(line(u1)), vec![]),
        (
            "L2 y",
            l2,
            Slot::Y(0),
            Factor(build_f32(d, h1 - zb)?),
            vec![z + s, h1 + delta - z],
        ),
        (
            "L2 ydot",
            l2,
            Slot::Ydot(0),
            Factor(line(zb)),
            vec![zb, h1 + delta - z],
        ),
        (
            "L3 ydot",
            l3,
            Slot::Ydot(0),
            Factor(line(z)),
            vec![z, h1 - z],
        ),
        (
            "L3 y",
            l3,
            Slot::Y(0),
            Factor(build_f32(d, z)?),
            vec![z, h1 + delta + s - z],
        ),
        ("L3 y(+)", l3, Slot::Y(1), Factor(line(u1)), vec![]),
        (
            "L4 y",
            l4,
            Slot::Y(0),
            Factor(build_phi54(d, zb)?),
            vec![z + s, h1 + 2.0 * delta + s - z],
        ),
        (
            "L4 ydot",
            l4,
            Slot::Ydot(0),
            Factor(build_f32(d, zb)?.mul(&phi)),
            vec![zb, h1 + 2.0 * delta + s - z],
        ),
        (
            "L4 ydot(-)",
            l4,
            Slot::Ydot(-1),
            Factor(f1phi2.clone()),
            vec![],
        ),
        (
            "L5 y",
            l5,
            Slot::Y(0),
            Factor(build_phi54(d, z)?),
            vec![z + delta + s, h1 + delta + s - z],
        ),
        (
            "L5 ydot",
            l5,
            Slot::Ydot(0),
            Factor(build_f32(d, h1 - z)?.mul(&phi)),
            vec![z + delta + s, h1 - z],
        ),
        ("L5 ydot(+)", l5, Slot::Ydot(1), Factor(f1phi2), vec![]),
        (
            "L6 ydot(-)",
            l6,
            Slot::Ydot(-1),
            Factor(build_phi54(d, z)?.mul(&phi)),
            vec![z + delta + s, h1 + delta + s - z],
        ),
        (
            "L6 ydot",
            l6,
            Slot::Ydot(0),
            Conditions(l6_conditions(d, z)?),
            vec![z + delta + s, h1 + 2.0 * delta + s - z],
        ),
        (
            "L6 ydot(+)",
            l6,
            Slot::Ydot(1),
            Factor(build_phi54(d, zb)?.mul(&phi)),
            vec![z + s, h1 + 2.0 * delta + s - z],
        ),
    ];
    rows.into_iter()
        .map(|(name, op, slot, reference, zeros)| {
            entry(d, name, coeff(op, slot, name)?, reference, &zeros)
        })
        .collect()
}

/// Observed dimensions of the (5,4) families characterizing `L4` and `L5`
/// (two simple points besides `P1^3 P3^2..P8^2`).
pub fn l4_l5_dimensions(d: &EllipticData, z: C64) -> Result<(usize, usize, usize)> {
    let (delta, h1) = (d.delta(), d.h1);
    let s = d.u[1] - d.u[0];
    let pts = d.base_points()?;
    let fam = |a: C64, b: C64| -> Result<usize> {
        let mut conds = vec![CurveCondition::Multiplicity(pts[0].clone(), 3)];
        conds.extend(
            pts[2..]
                .iter()
                .cloned()
                .map(|p| CurveCondition::Multiplicity(p, 2)),
        );
        conds.push(CurveCondition::Vanish(d.point(a)?));
        conds.push(CurveCondition::Vanish(d.point(b)?));
        Ok(build_family(5, 4, &conds, DIMENSION_TOL)?.dim())
    };
    let formula = 30 - 6 - 18 - 2;
    Ok((
        fam(z + s, h1 + 2.0 * delta - z + s)?,
        fam(z + delta + s, h1 + delta - z + s)?,
        formula,
    ))
}

/// Observed dimension of the (7,6) family characterizing `L6`.
pub fn l6_dimension(d: &EllipticData, z: C64) -> Result<usize> {
    Ok(build_family(7, 6, &l6_conditions(d, z)?, DIMENSION_TOL)?.dim())
}

/// Wave values at a fixed point `P` obtained from the seed
/// `(y(z - delta), y(z))` by solving `L1` and `L2` at the three shifts.
pub fn propagate_waves(ops: &OperatorSet, p: &SurfacePoint, seed: (C64, C64)) -> Result<Waves> {
    if seed.0.norm() == 0.0 && seed.1.norm() == 0.0 {
        return Err(Error::WaveDegeneracy("zero seed".into()));
    }
    let mut w = Waves::new()
        .with(Slot::Y(-1), seed.0)
        .with(Slot::Y(0), seed.1);
    let l1 = |k: usize| ops.l1[k].op.shifted(k as i32 - 1);
    let l2 = |k: usize| ops.l2[k].op.shifted(k as i32 - 1);
    let y1 = l1(1).solve_for(Slot::Y(1), p, &w)?;
    w.insert(Slot::Y(1), y1);
    let ym2 = l1(0).solve_for(Slot::Y(-2), p, &w)?;
    w.insert(Slot::Y(-2), ym2);
    let y2 = l1(2).solve_for(Slot::Y(2), p, &w)?;
    w.insert(Slot::Y(2), y2);
    for k in 0..3 {
        let slot = Slot::Ydot(k as i32 - 1);
        let v = l2(k).solve_for(slot, p, &w)?;
        w.insert(slot, v);
    }
    Ok(w)
}

/// Dotted waves `T(y)(z + k delta)` relabelled as `y(z + k delta)`.
pub fn dotted_waves(w: &Waves) -> Result<Waves> {
    let mut out = Waves::new();
    for k in -1..=1 {
        out.insert(Slot::Y(k), w.get(Slot::Ydot(k))?);
    }
    Ok(out)
}

/// Residuals of one compatibility check.
#[derive(Debug, Clone)]
pub struct CompatibilityCheck {
    /// Projective distance between `L6(P)` and dotted `L1(Pdot)`.
    pub distance: f64,
    /// Dotted `L1` applied to the propagated dotted waves at `Pdot`.
    pub dotted_wave_residual: f64,
    /// `L6` applied to the propagated dotted waves at `P`.
    pub l6_wave_residual: f64,
    /// Same distance with `Pdot` replaced by an unrelated point.
    pub negative_control: Option<f64>,
    /// Middle coefficient of dotted `L1`, pulled back to `P`, at
    /// `P_{z+delta-u1+u2}` and `P_{h1+2delta-z-u1+u2}` (relative, larger).
    pub dotted_zero_residual: f64,
    pub step_residuals: Vec<(String, f64)>,
    pub p: SurfacePoint,
    pub p_dot: SurfacePoint,
}

/// Uniform point of `[-1.5, 1.5]^2` in the affine chart, kept off `C0`;
/// the chain's coefficients lose precision near `C0`.
pub fn random_evaluation_point<R: Rng + ?Sized>(
    d: &EllipticData,
    rng: &mut R,
) -> Result<SurfacePoint> {
    let phi = d.phi22()?;
    for _ in 0..100 {
        let p = random_box_point(rng);
        if phi.relative_eval_at(&p) > OFF_C0 {
            return Ok(p);
        }
    }
    Err(Error::degenerate("no evaluation point off C0"))
}

// relative value of phi22 below which a point counts as on C0
const OFF_C0: f64 = 1e-2;

fn random_box_point<R: Rng + ?Sized>(rng: &mut R) -> SurfacePoint {
    SurfacePoint::affine(
        c64(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)),
        c64(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)),
    )
}

/// Coefficients of `op` at `p` listed in `order`.
pub fn eval_in_order(op: &LaxOperator, p: &SurfacePoint, order: &[Slot]) -> Result<Vec<C64>> {
    order
        .iter()
        .map(|s| Ok(coeff(op, *s, "operator")?.eval(p)))
        .collect()
}

/// Compares `L6` at `P` with `L1` of the dotted data at `Pdot`.
pub fn verify_compatibility<R: Rng + ?Sized>(
    d: &EllipticData,
    z: C64,
    p: &SurfacePoint,
    seed: (C64, C64),
    negative_control: bool,
    rng: &mut R,
) -> Result<CompatibilityCheck> {
    let ops = OperatorSet::build(d, z)?;
    let chain = run_chain(d, &ops)?;
    let state = PainleveState {
        data: d.clone(),
        p: p.clone(),
    };
    let next = elliptic_step(&state, rng)?;
    let l1_dot = build_l1(&next.data, z)?.op;
    let lhs = eval_in_order(
        &chain.l6,
        p,
        &[Slot::Ydot(-1), Slot::Ydot(0), Slot::Ydot(1)],
    )?;
    let rhs = eval_in_order(&l1_dot, &next.p, &[Slot::Y(-1), Slot::Y(0), Slot::Y(1)])?;
    let distance = projective_distance(&lhs, &rhs);
    let waves = propagate_waves(&ops, p, seed)?;
    let dw = dotted_waves(&waves)?;
    let dotted_wave_residual = l1_dot.residual(&next.p, &dw)?;
    let l6_wave_residual = chain.l6.residual(p, &waves)?;
    let (delta, shift) = (d.delta(), d.u[1] - d.u[0]);
    let middle = coeff(&l1_dot, Slot::Y(0), "dotted L1")?;
    let mut dotted_zero_residual: f64 = 0.0;
    for u in [z + delta + shift, d.h1 + 2.0 * delta - z + shift] {
        let at = PainleveState {
            data: d.clone(),
            p: d.point(u)?,
        };
        let image = elliptic_step(&at, rng)?;
        dotted_zero_residual = dotted_zero_residual.max(middle.relative_eval_at(&image.p));
    }
    let negative_control = if negative_control {
        let fake = random_box_point(rng);
        let order = [Slot::Y(-1), Slot::Y(0), Slot::Y(1)];
        Some(projective_distance(
            &lhs,
            &eval_in_order(&l1_dot, &fake, &order)?,
        ))
    } else {
        None
    };
    Ok(CompatibilityCheck {
        distance,
        dotted_wave_residual,
        l6_wave_residual,
        negative_control,
        dotted_zero_residual,
        step_residuals: chain.step_residuals,
        p: p.clone(),
        p_dot: next.p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (EllipticData, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = EllipticData::random(c64(0.1, 1.0), &mut rng).unwrap();
        (d, rng)
    }

    #[test]
    fn chain_divides_cleanly() {
        let (d, _) = setup(11);
        let ops = OperatorSet::build(&d, d.z).unwrap();
        let chain = run_chain(&d, &ops).unwrap();
        for (name, r) in &chain.step_residuals {
            assert!(*r < 1e-8, "{name}: {r:e}");
        }
        assert_eq!(chain.l6.coeffs[1].degree(), (7, 6));
    }

    #[test]
    fn eliminating_a_vanishing_slot_returns_the_other_operator() {
        let (d, _) = setup(12);
        let l1 = build_l1(&d, d.z).unwrap().op;
        let mut b = l1.clone();
        b.slots = [Slot::Y(-1), Slot::Y(0), Slot::Ydot(0)];
        b.coeffs[0] = BiPoly::zeros(3, 2);
        let (out, r) = eliminate(&b, &l1, Slot::Y(-1), &BiPoly::constant(c64(1.0, 0.0))).unwrap();
        assert!(r < 1e-14);
        // only the slots of b survive with nonzero coefficients
        let ydot = out.coeff(Slot::Ydot(0)).unwrap();
        let scaled = l1.coeffs[0].mul(&b.coeffs[2]);
        assert!(ydot.projective_distance(&scaled) < 1e-12);
    }

    #[test]
    fn structure_table_conformance() {
        let (d, _) = setup(13);
        let ops = OperatorSet::build(&d, d.z).unwrap();
        let chain = run_chain(&d, &ops).unwrap();
        let table = table_conformance(&d, &ops, &chain).unwrap();
        assert_eq!(table.len(), 18);
        for e in &table {
            assert!(
                e.divisor_residual < 1e-8,
                "{}: divisor {:e}",
                e.name,
                e.divisor_residual
            );
            assert!(
                e.zero_residual < 1e-8,
                "{}: zeros {:e}",
                e.name,
                e.zero_residual
            );
        }
    }

    #[test]
    fn propagation_is_linear_and_consistent() {
        let (d, _) = setup(14);
        let ops = OperatorSet::build(&d, d.z).unwrap();
        let p = SurfacePoint::affine(c64(0.35, -0.2), c64(0.6, 0.3));
        let seed = (c64(0.7, 0.1), c64(-0.3, 0.5));
        let w = propagate_waves(&ops, &p, seed).unwrap();
        let s = c64(1.7, -0.4);
        let ws = propagate_waves(&ops, &p, (seed.0 * s, seed.1 * s)).unwrap();
        for (k, v) in w.iter() {
            let vs = ws.get(*k).unwrap();
            assert!((vs - v * s).norm() < 1e-10 * (v * s).norm().max(1e-300));
        }
        let l1 = &ops.l1[1].op;
        assert!(l1.residual(&p, &w).unwrap() < 1e-10);
    }

    #[test]
    fn compatibility_holds_and_the_negative_control_fails() {
        let (d, mut rng) = setup(15);
        let p = SurfacePoint::affine(c64(0.35, -0.2), c64(0.6, 0.3));
        let check =
            verify_compatibility(&d, d.z, &p, (c64(0.7, 0.1), c64(-0.3, 0.5)), true, &mut rng)
                .unwrap();
        assert!(check.distance < 1e-6, "distance {:e}", check.distance);
        assert!(
            check.dotted_wave_residual < 1e-6,
            "{:e}",
            check.dotted_wave_residual
        );
        assert!(check.negative_control.unwrap() > 1e-2);
        assert!(
            check.dotted_zero_residual < 1e-8,
            "{:e}",
            check.dotted_zero_residual
        );
    }

    #[test]
    fn l6_family_is_a_net() {
        for seed in 0..8 {
            let (d, _) = setup(seed);
            assert_eq!(l6_dimension(&d, d.z).unwrap(), 3, "seed {seed}");
        }
    }

    #[test]
    fn l4_l5_families_match_the_condition_count() {
        for seed in 0..4 {
            let (d, _) = setup(seed);
            let (l4, l5, formula) = l4_l5_dimensions(&d, d.z).unwrap();
            assert_eq!((l4, l5), (formula, formula), "seed {seed}");
        }
    }
}
