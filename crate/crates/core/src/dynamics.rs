//! The elliptic Painleve step `T = T_{E2-E1}` by chord constructions on
//! (2,2) curves, and the involution `r`.

use rand::Rng;

use crate::curves::{build_family, BiPoly, CurveCondition, FAMILY_TOL};
use crate::error::{Error, Result};
use crate::numerics::{c64, is_finite, poly_roots, C64};
use crate::surface::{EllipticData, SurfacePoint};

/// Gate for matching known intersection points against computed ones.
pub const MATCH_GATE: f64 = 1e-6;
const CHORD_ATTEMPTS: usize = 8;

/// Data together with the dependent variable `P = (f, g)`.
#[derive(Debug, Clone)]
pub struct PainleveState {
    pub data: EllipticData,
    pub p: SurfacePoint,
}

/// The four intersections of a (2,2) curve with a (1,1) curve, with `f`
/// finite; `g` is kept projective so intersections on `g = infinity` are
/// representable. Each point is polished by Newton's method on the pair of
/// equations in the chart `|g| <= 1` or `|1/g| < 1`.
pub fn intersect_22_11(curve22: &BiPoly, conic: &BiPoly) -> Result<Vec<SurfacePoint>> {
    if curve22.degree() != (2, 2) || conic.degree() != (1, 1) {
        return Err(Error::invalid(
            "intersect_22_11 expects bidegrees (2,2) and (1,1)",
        ));
    }
    // conic: al + be f + (ga + ka f) g = 0
    let (al, be, ga, ka) = (
        conic.coeff(0, 0),
        conic.coeff(1, 0),
        conic.coeff(0, 1),
        conic.coeff(1, 1),
    );
    let num = [-al, -be];
    let den = [ga, ka];
    let mut quartic = vec![C64::new(0.0, 0.0); 5];
    for i in 0..=2 {
        for j in 0..=2 {
            let mut term = vec![curve22.coeff(i, j)];
            for _ in 0..i {
                term = poly_mul(&term, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
            }
            for _ in 0..j {
                term = poly_mul(&term, &num);
            }
            for _ in j..2 {
                term = poly_mul(&term, &den);
            }
            for (k, t) in term.iter().enumerate() {
                quartic[k] += t;
            }
        }
    }
    let scale: f64 = quartic.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if quartic[4].norm() < 1e-10 * scale {
        return Err(Error::Chord("intersection at f = infinity".into()));
    }
    let roots = poly_roots(&quartic)?;
    let flipped = (flip_g(curve22), flip_g(conic));
    let mut out = Vec::with_capacity(4);
    for f in roots.roots {
        let y = [-(al + be * f), ga + ka * f];
        if y[0].norm() == 0.0 && y[1].norm() == 0.0 {
            return Err(Error::Chord(
                "conic contains a vertical line through an intersection".into(),
            ));
        }
        let p = SurfacePoint::new([f, C64::new(1.0, 0.0)], y);
        out.push(polish(curve22, conic, &flipped, p));
    }
    Ok(out)
}

/// `p(f, 1/h) h^n`: the polynomial in the chart at `g = infinity`.
fn flip_g(p: &BiPoly) -> BiPoly {
    let n = p.n();
    BiPoly::from_fn(p.m(), n, |i, j| p.coeff(i, n - j))
}

fn polish(a: &BiPoly, b: &BiPoly, flipped: &(BiPoly, BiPoly), p: SurfacePoint) -> SurfacePoint {
    let (Some(f), true) = (p.f(), p.y.iter().all(|v| v.is_finite())) else {
        return p;
    };
    let at_infinity = p.y[0].norm() > p.y[1].norm();
    let (a, b, mut f, mut g) = if at_infinity {
        (&flipped.0, &flipped.1, f, p.y[1] / p.y[0])
    } else {
        (a, b, f, p.y[0] / p.y[1])
    };
    for _ in 0..4 {
        let (u, v) = (a.eval_affine(f, g), b.eval_affine(f, g));
        let (uf, ug) = (a.partial_affine(f, g, 1, 0), a.partial_affine(f, g, 0, 1));
        let (vf, vg) = (b.partial_affine(f, g, 1, 0), b.partial_affine(f, g, 0, 1));
        let det = uf * vg - ug * vf;
        if det.norm() == 0.0 {
            break;
        }
        let (df, dg) = ((u * vg - v * ug) / det, (v * uf - u * vf) / det);
        let (nf, ng) = (f - df, g - dg);
        if !(nf.is_finite() && ng.is_finite()) {
            break;
        }
        let before = a.relative_eval(f, g).max(b.relative_eval(f, g));
        let after = a.relative_eval(nf, ng).max(b.relative_eval(nf, ng));
        if after > before {
            break;
        }
        f = nf;
        g = ng;
    }
    let one = C64::new(1.0, 0.0);
    let y = if at_infinity { [one, g] } else { [g, one] };
    SurfacePoint::new([f, one], y)
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Removes each known point from `found` by nearest pairing within the gate.
fn deflate(found: &mut Vec<SurfacePoint>, known: &[SurfacePoint]) -> Result<()> {
    for k in known {
        let (idx, dist) = found
            .iter()
            .enumerate()
            .map(|(i, p)| (i, k.distance(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::Chord("no intersections left to deflate".into()))?;
        if dist > MATCH_GATE {
            return Err(Error::Chord(format!(
                "known point not among intersections (distance {dist:e})"
            )));
        }
        found.remove(idx);
    }
    Ok(())
}

/// Residual intersections of `curve22` with the (1,1) curve through
/// `through` (completed by `normalization` when only two points are given).
/// Points of `through` lying on `curve22` are deflated.
pub fn chord_residual_points(
    curve22: &BiPoly,
    through: &[SurfacePoint],
    normalization: Option<&SurfacePoint>,
) -> Result<Vec<SurfacePoint>> {
    let mut conds: Vec<CurveCondition> = through
        .iter()
        .cloned()
        .map(CurveCondition::Vanish)
        .collect();
    if let Some(n) = normalization {
        conds.push(CurveCondition::Vanish(n.clone()));
    }
    if conds.len() != 3 {
        return Err(Error::invalid(
            "a (1,1) chord needs exactly three conditions",
        ));
    }
    let conic = build_family(1, 1, &conds, FAMILY_TOL)?.unique("chord")?;
    let mut found = intersect_22_11(curve22, &conic)?;
    deflate(&mut found, through)?;
    Ok(found)
}

fn random_affine<R: Rng + ?Sized>(rng: &mut R) -> SurfacePoint {
    let mut d = || c64(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
    SurfacePoint::affine(d(), d())
}

/// `T(P2) = P_{u2 + delta}`.
pub fn t_p2(data: &EllipticData) -> Result<SurfacePoint> {
    data.point(data.u[1] + data.delta())
}

/// One step of the dynamics: dotted parameters and `T(P)` from
/// `T(P2) + T(P) = P1 + P` on the (2,2) curve through `P1, P3..P8, P`.
pub fn elliptic_step<R: Rng + ?Sized>(state: &PainleveState, rng: &mut R) -> Result<PainleveState> {
    let data = &state.data;
    let p = &state.p;
    let pts = data.base_points()?;
    let tp2 = t_p2(data)?;
    for (k, q) in pts.iter().enumerate() {
        if q.distance(p) < 1e-8 {
            return Err(Error::degenerate(format!("P coincides with P{}", k + 1)));
        }
    }
    let mut conds = vec![CurveCondition::Vanish(pts[0].clone())];
    conds.extend(pts[2..].iter().cloned().map(CurveCondition::Vanish));
    conds.push(CurveCondition::Vanish(p.clone()));
    let c = build_family(2, 2, &conds, FAMILY_TOL)?.unique("curve through P")?;
    let on_c = c.relative_eval_at(&tp2);
    if on_c > 1e-8 {
        return Err(Error::degenerate(format!(
            "T(P2) off the curve through P ({on_c:e})"
        )));
    }
    let mut last = Error::Chord("no attempt".into());
    for _ in 0..CHORD_ATTEMPTS {
        let n = random_affine(rng);
        if c.relative_eval_at(&n) < 1e-3 {
            continue;
        }
        let attempt =
            chord_residual_points(&c, &[pts[0].clone(), p.clone()], Some(&n)).and_then(|rs| {
                if rs.len() != 2 {
                    return Err(Error::Chord(
                        "first chord residual is not two points".into(),
                    ));
                }
                let through = [tp2.clone(), rs[0].clone(), rs[1].clone()];
                chord_residual_points(&c, &through, None)
            });
        match attempt {
            Ok(mut rest) if rest.len() == 1 => {
                let next = rest.remove(0);
                return Ok(PainleveState {
                    data: data.dotted(),
                    p: next,
                });
            }
            Ok(_) => last = Error::Chord("second chord residual is not one point".into()),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// The involution `r(x, y) = (x, y~)` with `y~` the second root of
/// `F(x, g) = 0` for `F` the (2,2) curve through `P1, T(P2), P3..P8, Q`.
pub fn involution_r(data: &EllipticData, q: &SurfacePoint) -> Result<SurfacePoint> {
    let (x, y) = q.fg()?;
    let pts = data.base_points()?;
    let mut conds = vec![
        CurveCondition::Vanish(pts[0].clone()),
        CurveCondition::Vanish(t_p2(data)?),
    ];
    conds.extend(pts[2..].iter().cloned().map(CurveCondition::Vanish));
    conds.push(CurveCondition::Vanish(q.clone()));
    let f = build_family(2, 2, &conds, FAMILY_TOL)?.unique("r-curve")?;
    let quad = f.restrict_f(x);
    let scale = quad.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if quad[2].norm() < 1e-10 * scale {
        return Err(Error::degenerate("r: quadratic in g degenerates"));
    }
    let other = -quad[1] / quad[2] - y;
    if !is_finite(other) {
        return Err(Error::degenerate("r: image outside the affine chart"));
    }
    Ok(SurfacePoint::affine(x, other))
}

/// `g` on the line `f = f0` with `fdot(f0, g) = target`, by secant iteration
/// starting from `g0`.
pub fn solve_fdot<R: Rng + ?Sized>(
    data: &EllipticData,
    f0: C64,
    target: C64,
    g0: C64,
    rng: &mut R,
) -> Result<SurfacePoint> {
    let scale = 1.0 + g0.norm();
    let mut last = Error::degenerate("fdot = target search never started");
    for attempt in 0..SOLVE_RESTARTS {
        let start = if attempt == 0 {
            g0
        } else {
            g0 + c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
        };
        match secant_fdot(data, f0, target, start, scale, rng) {
            Ok(p) => return Ok(p),
            Err(e) => last = e,
        }
    }
    Err(last)
}

const SOLVE_RESTARTS: usize = 8;
// iterates beyond this multiple of the start scale count as divergence
const SOLVE_ESCAPE: f64 = 1e6;

fn secant_fdot<R: Rng + ?Sized>(
    data: &EllipticData,
    f0: C64,
    target: C64,
    g0: C64,
    scale: f64,
    rng: &mut R,
) -> Result<SurfacePoint> {
    let mut eval = |g: C64| -> Result<C64> {
        if !is_finite(g) || g.norm() > SOLVE_ESCAPE * scale {
            return Err(Error::degenerate("fdot = target search diverged"));
        }
        let st = PainleveState {
            data: data.clone(),
            p: SurfacePoint::affine(f0, g),
        };
        let next = elliptic_step(&st, rng)?;
        let (fd, _) = next.p.fg()?;
        Ok(fd - target)
    };
    // g as a Moebius function of fdot through the last three samples, evaluated at the target
    let mut pts: Vec<(C64, C64)> = Vec::with_capacity(3);
    for k in 0..3 {
        let g = g0 + c64(0.3, 0.2) * (k as f64) * scale;
        pts.push((g, eval(g)?));
    }
    let (mut g, mut r) = pts[2];
    for _ in 0..60 {
        let [(g1, w1), (g2, w2), (g3, w3)] = [pts[0], pts[1], pts[2]];
        let k = (-w2) * (w1 - w3) / ((-w3) * (w1 - w2));
        let next = (g2 * (g1 - g3) - k * g3 * (g1 - g2)) / ((g1 - g3) - k * (g1 - g2));
        let step = next - g;
        g = next;
        r = eval(g)?;
        pts.remove(0);
        pts.push((g, r));
        if step.norm() < 1e-13 * (1.0 + g.norm()) || r.norm() < 1e-14 * (1.0 + target.norm()) {
            return Ok(SurfacePoint::affine(f0, g));
        }
    }
    if r.norm() < 1e-10 * (1.0 + target.norm()) {
        Ok(SurfacePoint::affine(f0, g))
    } else {
        Err(Error::degenerate(format!(
            "fdot = target search did not converge ({:e})",
            r.norm()
        )))
    }
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
    fn dotted_parameters() {
        let (d, _) = setup(1);
        let dd = d.dotted();
        let delta = d.delta();
        assert!((dd.u[0] - (d.u[0] - delta)).norm() < 1e-15);
        assert!((dd.u[1] - (d.u[1] + delta)).norm() < 1e-15);
        assert_eq!(dd.u[2..], d.u[2..]);
        assert!((dd.delta() - delta).norm() < 1e-14);
    }

    #[test]
    fn step_of_a_point_on_c0_shifts_its_parameter() {
        let (d, mut rng) = setup(2);
        let w = d.z;
        let st = PainleveState {
            data: d.clone(),
            p: d.point(w).unwrap(),
        };
        let next = elliptic_step(&st, &mut rng).unwrap();
        let expected = d.point(w + d.u[0] - d.u[1] - d.delta()).unwrap();
        assert!(
            next.p.distance(&expected) < 1e-8,
            "{:e}",
            next.p.distance(&expected)
        );
    }

    #[test]
    fn step_is_independent_of_the_pencil() {
        let (d, mut rng) = setup(3);
        let st = PainleveState {
            data: d,
            p: SurfacePoint::affine(c64(0.4, -0.3), c64(0.7, 0.2)),
        };
        let a = elliptic_step(&st, &mut rng).unwrap();
        for _ in 0..5 {
            let b = elliptic_step(&st, &mut rng).unwrap();
            assert!(a.p.distance(&b.p) < 1e-8);
        }
    }

    #[test]
    fn r_is_a_fibrewise_involution() {
        let (d, _) = setup(4);
        let q = SurfacePoint::affine(c64(0.3, 0.5), c64(-0.2, 0.9));
        let rq = involution_r(&d, &q).unwrap();
        assert_eq!(rq.f(), q.f());
        let rrq = involution_r(&d, &rq).unwrap();
        assert!(rrq.distance(&q) < 1e-9);
        let pz = d.point(d.z).unwrap();
        let expected = d.point(d.h1 - d.z).unwrap();
        assert!(involution_r(&d, &pz).unwrap().distance(&expected) < 1e-9);
    }

    #[test]
    fn chord_returns_residual_points_only() {
        let (d, mut rng) = setup(5);
        let c0 = d.phi22().unwrap();
        let p = d.point(d.u[0]).unwrap();
        let q = d.point(d.z).unwrap();
        let n = random_affine(&mut rng);
        let rest = chord_residual_points(&c0, &[p, q], Some(&n)).unwrap();
        assert_eq!(rest.len(), 2);
        for r in &rest {
            assert!(c0.relative_eval_at(r) < 1e-10);
        }
    }
}
