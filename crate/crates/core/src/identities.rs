//! Numerical checks of the auxiliary identities behind compatibility: level-set
//! characterizations of the dynamics, the determinant apparatus, and the
//! structure of the eliminated operators.

use rand::Rng;

use crate::compat::{l6_conditions, run_chain, OperatorSet};
use crate::curves::{build_family, build_family_of_dim, BiPoly, CurveCondition, FAMILY_TOL};
use crate::dynamics::{elliptic_step, involution_r, solve_fdot, PainleveState};
use crate::error::{Error, Result};
use crate::lax::{
    abc_coefficients, build_l2, build_l3, build_phi54, det_d, g_quadratic_mismatch, phi54_family,
    poly_g_with, script_f, LaxOperator, Slot,
};
use crate::numerics::{c64, projective_distance, C64};
use crate::surface::{EllipticData, SurfacePoint, GENERATOR_BOUND, GENERATOR_MARGIN};

/// Outcome of one identity over several random samples.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub statement: &'static str,
    /// Largest residual over all samples and sub-checks.
    pub residual: f64,
    pub samples: usize,
    /// Worst residual per sub-check.
    pub parts: Vec<(String, f64)>,
}

struct Parts(Vec<(String, f64)>);

impl Parts {
    fn new() -> Self {
        Self(Vec::new())
    }

    fn record(&mut self, name: &str, r: f64) {
        let r = if r.is_finite() { r } else { f64::INFINITY };
        match self.0.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => *v = v.max(r),
            None => self.0.push((name.to_string(), r)),
        }
    }

    fn finish(self, name: &'static str, statement: &'static str, samples: usize) -> IdentityCheck {
        let residual = self.0.iter().map(|(_, r)| *r).fold(0.0, f64::max);
        IdentityCheck {
            name,
            statement,
            residual,
            samples,
            parts: self.0,
        }
    }
}

fn rel(a: C64, b: C64) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

fn unit<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Spectral parameter drawn from the cell, held to the generator's margins.
pub fn random_z<R: Rng + ?Sized>(d: &EllipticData, rng: &mut R) -> Result<C64> {
    let tau = d.lattice.tau();
    for _ in 0..200 {
        let z = c64(rng.gen::<f64>(), 0.0) + tau * rng.gen::<f64>();
        let dz = d.with_z(z);
        if dz.validate(GENERATOR_MARGIN, GENERATOR_BOUND).is_ok() {
            return Ok(z);
        }
    }
    Err(Error::degenerate(
        "no generic spectral parameter in 200 draws",
    ))
}

/// Point near the surface's natural scale: a point of the curve with both
/// coordinates perturbed by up to 40 percent.
pub fn random_point<R: Rng + ?Sized>(d: &EllipticData, rng: &mut R) -> Result<SurfacePoint> {
    let tau = d.lattice.tau();
    for _ in 0..200 {
        let u = c64(rng.gen::<f64>(), 0.0) + tau * rng.gen::<f64>();
        if let Ok(p) = d.point(u) {
            if let Ok((f, g)) = p.fg() {
                let f = f * (c64(1.0, 0.0) + unit(rng) * 0.4);
                let g = g * (c64(1.0, 0.0) + unit(rng) * 0.4);
                if f.norm() < 1e3 && g.norm() < 1e3 && f.norm() > 1e-3 && g.norm() > 1e-3 {
                    return Ok(SurfacePoint::affine(f, g));
                }
            }
        }
    }
    Err(Error::degenerate("no sample point in 200 draws"))
}

/// Tensor-product Lagrange interpolant on nodes placed on circles around the
/// base-point cluster. Exact for polynomials of bidegree below the node counts.
struct TensorInterp {
    xs: Vec<C64>,
    ys: Vec<C64>,
    vals: Vec<Vec<C64>>,
    scale: f64,
}

fn circle_nodes(center: C64, radius: f64, k: usize, phase: f64) -> Vec<C64> {
    (0..k)
        .map(|j| {
            center + C64::from_polar(radius, phase + std::f64::consts::TAU * j as f64 / k as f64)
        })
        .collect()
}

fn lagrange(nodes: &[C64], x: C64) -> (Vec<C64>, Vec<C64>) {
    let n = nodes.len();
    let mut l = vec![c64(1.0, 0.0); n];
    let mut dl = vec![c64(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let den = nodes[i] - nodes[j];
            // product rule on (x - x_j)/den
            dl[i] = dl[i] * (x - nodes[j]) / den + l[i] / den;
            l[i] *= (x - nodes[j]) / den;
        }
    }
    (l, dl)
}

impl TensorInterp {
    fn build(
        xs: Vec<C64>,
        ys: Vec<C64>,
        mut f: impl FnMut(C64, C64) -> Result<C64>,
    ) -> Result<Self> {
        let mut vals = Vec::with_capacity(xs.len());
        let mut scale: f64 = 0.0;
        for &x in &xs {
            let row: Vec<C64> = ys.iter().map(|&y| f(x, y)).collect::<Result<_>>()?;
            scale = row.iter().fold(scale, |s, v| s.max(v.norm()));
            vals.push(row);
        }
        if scale == 0.0 {
            return Err(Error::degenerate(
                "interpolated function vanishes on all nodes",
            ));
        }
        Ok(Self {
            xs,
            ys,
            vals,
            scale,
        })
    }

    /// Value and both partials, scaled by the largest nodal value.
    fn eval(&self, x: C64, y: C64) -> (C64, C64, C64) {
        let (lx, dlx) = lagrange(&self.xs, x);
        let (ly, dly) = lagrange(&self.ys, y);
        let mut v = c64(0.0, 0.0);
        let mut vx = c64(0.0, 0.0);
        let mut vy = c64(0.0, 0.0);
        for i in 0..self.xs.len() {
            for j in 0..self.ys.len() {
                let w = self.vals[i][j];
                v += w * lx[i] * ly[j];
                vx += w * dlx[i] * ly[j];
                vy += w * lx[i] * dly[j];
            }
        }
        (v / self.scale, vx / self.scale, vy / self.scale)
    }

    /// Absolute Lagrange sum at `(x, y)` on the same scale as `eval`; rounding
    /// in an extrapolated value is relative to this.
    fn magnitude(&self, x: C64, y: C64) -> f64 {
        let (lx, _) = lagrange(&self.xs, x);
        let (ly, _) = lagrange(&self.ys, y);
        let mut m = 0.0;
        for i in 0..self.xs.len() {
            for j in 0..self.ys.len() {
                m += self.vals[i][j].norm() * lx[i].norm() * ly[j].norm();
            }
        }
        m / self.scale
    }
}

fn cluster(d: &EllipticData) -> Result<(C64, f64, C64, f64)> {
    let pts: Vec<(C64, C64)> = d
        .base_points()?
        .iter()
        .map(|p| p.fg())
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let cf = pts.iter().map(|p| p.0).sum::<C64>() / n;
    let cg = pts.iter().map(|p| p.1).sum::<C64>() / n;
    let rf = pts.iter().map(|p| (p.0 - cf).norm()).fold(0.0, f64::max);
    let rg = pts.iter().map(|p| (p.1 - cg).norm()).fold(0.0, f64::max);
    Ok((cf, rf * 1.3, cg, rg * 1.3))
}

pub fn fdot<R: Rng + ?Sized>(
    d: &EllipticData,
    p: &SurfacePoint,
    rng: &mut R,
) -> Result<SurfacePoint> {
    let st = PainleveState {
        data: d.clone(),
        p: p.clone(),
    };
    Ok(elliptic_step(&st, rng)?.p)
}

/// Point on `{fdot = target}` near a random start.
pub fn level_point<R: Rng + ?Sized>(
    d: &EllipticData,
    target: C64,
    rng: &mut R,
) -> Result<SurfacePoint> {
    // level sets hug C0 and pass through the base points; keep the solution
    // farthest from both, where high-bidegree coefficients keep their
    // relative accuracy
    let phi = d.phi22()?;
    let base: Vec<(C64, C64)> = d
        .base_points()?
        .iter()
        .map(|p| p.fg())
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, SurfacePoint)> = None;
    let mut last = Error::degenerate("level set search not attempted");
    for _ in 0..LEVEL_CANDIDATES {
        let start = random_point(d, rng)?;
        let (f0, g0) = start.fg()?;
        match solve_fdot(d, f0, target, g0, rng) {
            Ok(p) => {
                let Ok((f, g)) = p.fg() else { continue };
                let near = base
                    .iter()
                    .map(|(bf, bg)| {
                        (f - bf).norm().hypot((g - bg).norm()) / f.norm().hypot(g.norm()).max(1.0)
                    })
                    .fold(f64::INFINITY, f64::min);
                let off = phi.relative_eval_at(&p).min(near);
                if best.as_ref().is_none_or(|(b, _)| off > *b) {
                    best = Some((off, p));
                }
            }
            Err(e) => last = e,
        }
    }
    best.map(|(_, p)| p).ok_or(last)
}

const LEVEL_CANDIDATES: usize = 16;

fn phi54_through(d: &EllipticData, q: &SurfacePoint) -> Result<BiPoly> {
    let pts = d.base_points()?;
    let mut conds = vec![CurveCondition::Multiplicity(pts[0].clone(), 4)];
    conds.extend(
        pts[2..]
            .iter()
            .cloned()
            .map(|p| CurveCondition::Multiplicity(p, 2)),
    );
    conds.push(CurveCondition::Vanish(q.clone()));
    build_family_of_dim(5, 4, &conds, 1)?.unique("phi54 through Q")
}

fn cross_ratio(a: C64, b: C64, c: C64, e: C64) -> C64 {
    (a - c) * (b - e) / ((a - e) * (b - c))
}

/// Bound on `|d log cr|` per unit relative perturbation of the four values.
fn cross_ratio_condition(a: C64, b: C64, c: C64, e: C64) -> f64 {
    let s = a.norm().max(b.norm()).max(c.norm()).max(e.norm());
    let inv = |x: C64| 2.0 / x.norm();
    s * (inv(a - c) + inv(b - e) + inv(a - e) + inv(b - c))
}

/// The (5,4) curve through `P1^4 P3^2 .. P8^2 Q` is the level set
/// `fdot = fdot(Q)`; `fdot` is a ratio of two members of the pencil.
pub fn fdot_level_curve<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    let pts = d.base_points()?;
    let mut conds = vec![CurveCondition::Multiplicity(pts[0].clone(), 4)];
    conds.extend(
        pts[2..]
            .iter()
            .cloned()
            .map(|p| CurveCondition::Multiplicity(p, 2)),
    );
    let pencil = build_family_of_dim(5, 4, &conds, 2)?;
    for _ in 0..samples {
        let q = random_point(d, rng)?;
        let x_dot = fdot(d, &q, rng)?.fg()?.0;
        let f = phi54_through(d, &q)?;
        let p = level_point(d, x_dot, rng)?;
        parts.record("vanishes on the level set", f.relative_eval_at(&p));
        let probes: Vec<SurfacePoint> = (0..4)
            .map(|_| random_point(d, rng))
            .collect::<Result<_>>()?;
        let fd: Vec<C64> = probes
            .iter()
            .map(|p| Ok(fdot(d, p, rng)?.fg()?.0))
            .collect::<Result<_>>()?;
        let ratio: Vec<C64> = probes
            .iter()
            .map(|p| pencil.basis[0].eval(p) / pencil.basis[1].eval(p))
            .collect();
        // relative backward error in the fdot values
        let kappa = cross_ratio_condition(fd[0], fd[1], fd[2], fd[3]).max(cross_ratio_condition(
            ratio[0], ratio[1], ratio[2], ratio[3],
        ));
        parts.record(
            "fdot is a pencil ratio",
            rel(
                cross_ratio(fd[0], fd[1], fd[2], fd[3]),
                cross_ratio(ratio[0], ratio[1], ratio[2], ratio[3]),
            ) / kappa,
        );
    }
    Ok(parts.finish(
        "fdot_level_curve",
        "curve through P1^4 P3^2..P8^2 Q is {fdot = fdot(Q)}",
        samples,
    ))
}

/// `phi54(z)` vanishes where `fdot = f_z`, and passes through the unassigned
/// point `P_{h1 + delta - z - u1 + u2}`.
pub fn phi54_on_level_set<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    let s = d.u[1] - d.u[0];
    for _ in 0..samples {
        let z = random_z(d, rng)?;
        let fam = phi54_family(d, z)?;
        parts.record("family dimension", (fam.dim() as f64 - 1.0).abs());
        let phi = build_phi54(d, z)?;
        let p = level_point(d, d.f_u(z), rng)?;
        parts.record("vanishes where fdot = f_z", phi.relative_eval_at(&p));
        parts.record(
            "unassigned base point",
            phi.relative_eval_at(&d.point(d.h1 + d.delta() - z + s)?),
        );
    }
    Ok(parts.finish("phi54_on_level_set", "phi54(z) = 0 on fdot = f_z", samples))
}

/// For a basis `F1, F2` of the (3,2) curves through `P1^2 P3..P8 P_z`, the
/// ratio is invariant under `P -> r(T(P))`.
pub fn pencil_ratio_invariance<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    let pts = d.base_points()?;
    for _ in 0..samples {
        let z = random_z(d, rng)?;
        let mut conds = vec![CurveCondition::Multiplicity(pts[0].clone(), 2)];
        conds.extend(pts[2..].iter().cloned().map(CurveCondition::Vanish));
        conds.push(CurveCondition::Vanish(d.point(z)?));
        let fam = build_family(3, 2, &conds, FAMILY_TOL)?;
        if fam.dim() != 2 {
            return Err(Error::Dimension {
                what: "F1/F2 pencil".into(),
                expected: 2,
                observed: fam.dim(),
            });
        }
        let p = random_point(d, rng)?;
        let rp = involution_r(d, &fdot(d, &p, rng)?)?;
        let ratio = |q: &SurfacePoint| fam.basis[0].eval(q) / fam.basis[1].eval(q);
        parts.record("ratio invariance", rel(ratio(&p), ratio(&rp)));
    }
    Ok(parts.finish(
        "pencil_ratio_invariance",
        "F1/F2 is invariant under r T",
        samples,
    ))
}

/// `script F = D/(x - f1)` has bidegree (5,2) in `Q`, a double point at `P1`,
/// zeros at `P3..P8` and `P`, vertical tangents at `P3..P8`; `D` vanishes on
/// `x = f1`.
pub fn determinant_bidegree<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    let (cf, rf, cg, rg) = cluster(d)?;
    let pts: Vec<(C64, C64)> = d
        .base_points()?
        .iter()
        .map(|p| p.fg())
        .collect::<Result<_>>()?;
    let f1 = pts[0].0;
    for _ in 0..samples {
        let p = random_point(d, rng)?.fg()?;
        let phase = rng.gen::<f64>();
        let xs = circle_nodes(cf, rf, 6, phase);
        let ys = circle_nodes(cg, rg, 3, phase);
        let it = TensorInterp::build(xs.clone(), ys, |x, y| script_f(d, p, (x, y)))?;
        for _ in 0..3 {
            let q = random_point(d, rng)?.fg()?;
            let direct = script_f(d, p, q)? / it.scale;
            parts.record(
                "bidegree (5,2)",
                (it.eval(q.0, q.1).0 - direct).norm() / it.magnitude(q.0, q.1),
            );
        }
        let (v, vx, vy) = it.eval(pts[0].0, pts[0].1);
        parts.record(
            "double point at P1",
            v.norm().max(vx.norm() * rf).max(vy.norm() * rg),
        );
        for q in &pts[2..] {
            let (v, _, vy) = it.eval(q.0, q.1);
            parts.record("zeros at P3..P8", v.norm());
            parts.record("vertical tangents at P3..P8", vy.norm() * rg);
        }
        parts.record("zero at P", it.eval(p.0, p.1).0.norm());
        let y = cg + unit(rng) * rg;
        let reference = det_d(d, p, (xs[0], y))?;
        parts.record(
            "D vanishes on x = f1",
            det_d(d, p, (f1, y))?.norm() / reference.norm(),
        );
    }
    Ok(parts.finish(
        "determinant_bidegree",
        "script F in Q: bidegree (5,2) with the listed zeros",
        samples,
    ))
}

/// `G = D / ((g - g1)^2 (x - f1)^2)` at `f = f1` does not depend on `g`, has
/// bidegree (4,2) in `Q`, and `G = dG/dy = 0` at `P1, P3..P8`.
pub fn reduced_determinant<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    let (cf, rf, cg, rg) = cluster(d)?;
    let pts: Vec<(C64, C64)> = d
        .base_points()?
        .iter()
        .map(|p| p.fg())
        .collect::<Result<_>>()?;
    for _ in 0..samples {
        let offset = unit(rng) + c64(0.3, 0.0);
        let q = random_point(d, rng)?.fg()?;
        let other = offset + unit(rng) * 0.5 + c64(0.5, 0.2);
        parts.record(
            "independent of P",
            rel(poly_g_with(d, q, offset)?, poly_g_with(d, q, other)?),
        );
        let phase = rng.gen::<f64>();
        let it = TensorInterp::build(
            circle_nodes(cf, rf, 5, phase),
            circle_nodes(cg, rg, 3, phase),
            |x, y| poly_g_with(d, (x, y), offset),
        )?;
        let probe = random_point(d, rng)?.fg()?;
        let direct = poly_g_with(d, probe, offset)? / it.scale;
        parts.record(
            "bidegree (4,2)",
            (it.eval(probe.0, probe.1).0 - direct).norm() / it.magnitude(probe.0, probe.1),
        );
        for (k, q) in pts.iter().enumerate() {
            if k == 1 {
                continue;
            }
            let (v, _, vy) = it.eval(q.0, q.1);
            parts.record("G = 0 at P1, P3..P8", v.norm());
            parts.record("dG/dy = 0 at P1, P3..P8", vy.norm() * rg);
        }
    }
    Ok(parts.finish(
        "reduced_determinant",
        "G is P-independent of bidegree (4,2), singular along P1, P3..P8",
        samples,
    ))
}

fn random_fibre<R: Rng + ?Sized>(
    d: &EllipticData,
    rng: &mut R,
    count: usize,
) -> Result<(C64, Vec<C64>)> {
    let x = random_point(d, rng)?.fg()?.0;
    let ys = (0..count)
        .map(|_| Ok(random_point(d, rng)?.fg()?.1))
        .collect::<Result<_>>()?;
    Ok((x, ys))
}

/// `G = A + 2By + Cy^2` where `y~ = -(A + By)/(B + Cy)` is the involution.
pub fn involution_quadratic<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    for _ in 0..samples {
        let (x, ys) = random_fibre(d, rng, 8)?;
        let fit = abc_coefficients(d, x, &ys)?;
        parts.record("involution is fractional linear", fit.residual);
        let (_, probes) = random_fibre(d, rng, 10)?;
        parts.record(
            "G = A + 2By + Cy^2",
            g_quadratic_mismatch(d, &fit, x, &probes)?,
        );
    }
    Ok(parts.finish("involution_quadratic", "G = A + 2By + Cy^2", samples))
}

fn r_fibre(d: &EllipticData, x: C64, y: C64) -> Result<C64> {
    Ok(involution_r(d, &SurfacePoint::affine(x, y))?.fg()?.1)
}

/// `dy~/dy` from two wide secants; exact for a Moebius map of `y`.
fn r_derivative(d: &EllipticData, x: C64, y: C64) -> Result<C64> {
    let h = c64(0.3, 0.1) * (1.0 + y.norm());
    let (t1, t2) = (y + h, y - h);
    let (m, m1, m2) = (r_fibre(d, x, y)?, r_fibre(d, x, t1)?, r_fibre(d, x, t2)?);
    Ok((m - m1) / (y - t1) * ((m - m2) / (y - t2)) / ((m1 - m2) / (t1 - t2)))
}

/// `G(x,y~)/G(x,y) = (AC - B^2)/(B + Cy)^2 = dy~/dy` and the cross-ratio form.
pub fn involution_derivative<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    for _ in 0..samples {
        let (x, ys) = random_fibre(d, rng, 8)?;
        let fit = abc_coefficients(d, x, &ys)?;
        let (_, yg) = random_fibre(d, rng, 2)?;
        let (y, g) = (yg[0], yg[1]);
        let yt = r_fibre(d, x, y)?;
        let gt = r_fibre(d, x, g)?;
        let probe = c64(0.8, 0.45);
        let g_ratio = poly_g_with(d, (x, yt), probe)? / poly_g_with(d, (x, y), probe)?;
        let abc = (fit.a * fit.c - fit.b * fit.b) / ((fit.b + fit.c * y) * (fit.b + fit.c * y));
        let cross = -(gt - yt) * (g - yt) / ((gt - y) * (g - y));
        parts.record("G ratio = (AC - B^2)/(B + Cy)^2", rel(g_ratio, abc));
        parts.record(
            "(AC - B^2)/(B + Cy)^2 = dy~/dy",
            rel(abc, r_derivative(d, x, y)?),
        );
        parts.record("dy~/dy = cross ratio", rel(abc, cross));
    }
    Ok(parts.finish(
        "involution_derivative",
        "G(x,y~)/G(x,y) identities",
        samples,
    ))
}

/// The `script F` ratio at one sample; errors on a fixed point of `r`.
pub fn cross_ratio_at(d: &EllipticData, q: (C64, C64), g: C64, g_cross: C64) -> Result<(C64, C64)> {
    let (x, y) = q;
    let yt = r_fibre(d, x, y)?;
    if rel(yt, y) < 1e-6 {
        return Err(Error::invalid("sample is a fixed point of the involution"));
    }
    let f1 = d.f_u(d.u[0]);
    let lhs = script_f(d, (f1, g), (x, yt))? / script_f(d, (f1, g), (x, y))?;
    let gt = r_fibre(d, x, g_cross)?;
    let rhs = -(gt - yt) * (g_cross - yt) / ((gt - y) * (g_cross - y));
    Ok((lhs, rhs))
}

/// `script F(f1, g; x, y~) / script F(f1, g; x, y)` equals the cross ratio and
/// does not depend on `g`.
pub fn cross_ratio_identity<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    for _ in 0..samples {
        let q = random_point(d, rng)?.fg()?;
        let (_, gs) = random_fibre(d, rng, 3)?;
        let (l1, r1) = cross_ratio_at(d, q, gs[0], gs[2])?;
        let (l2, _) = cross_ratio_at(d, q, gs[1], gs[2])?;
        parts.record("ratio identity", rel(l1, r1));
        parts.record("independent of g", rel(l1, l2));
    }
    Ok(parts.finish("cross_ratio_identity", "script F ratio on f = f1", samples))
}

fn membership(op: &LaxOperator, conds: &[CurveCondition]) -> f64 {
    op.coeffs
        .iter()
        .flat_map(|c| conds.iter().map(move |k| k.residual(c)))
        .fold(0.0, f64::max)
}

/// `|grad c x grad phi22|` relative to the term magnitudes of `grad c` and
/// `|grad phi22|`: zero when `c = 0` is tangent to `C0` at `p` or singular
/// there.
fn tangent_to_c0(d: &EllipticData, c: &BiPoly, p: &SurfacePoint) -> Result<f64> {
    let phi = d.phi22()?;
    let (cf, cg) = (c.partial(p, 1, 0), c.partial(p, 0, 1));
    let (pf, pg) = (phi.partial(p, 1, 0), phi.partial(p, 0, 1));
    let np = (pf.norm_sqr() + pg.norm_sqr()).sqrt();
    if np == 0.0 {
        return Err(Error::degenerate("C0 singular at the base point"));
    }
    let sc = c.partial_scale(p, 1, 0).hypot(c.partial_scale(p, 0, 1));
    if sc == 0.0 {
        return Ok(0.0);
    }
    Ok((cf * pg - cg * pf).norm() / (sc * np))
}

fn doubled_conditions(d: &EllipticData, p1: usize, extra: &[C64]) -> Result<Vec<CurveCondition>> {
    let pts = d.base_points()?;
    let mut conds = vec![CurveCondition::Multiplicity(pts[0].clone(), p1)];
    conds.extend(
        pts[2..]
            .iter()
            .cloned()
            .map(|p| CurveCondition::Multiplicity(p, 2)),
    );
    for &u in extra {
        conds.push(CurveCondition::Vanish(d.point(u)?));
    }
    Ok(conds)
}

fn step(chain: &crate::compat::Chain, name: &str) -> f64 {
    chain
        .step_residuals
        .iter()
        .filter(|(n, _)| n.starts_with(name))
        .map(|(_, r)| *r)
        .fold(0.0, f64::max)
}

/// First elimination: `L3` divides cleanly, lies in its (3,2) system, and agrees with the
/// directly characterized operator.
pub fn l3_elimination<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    let s = d.u[1] - d.u[0];
    let pts = d.base_points()?;
    for _ in 0..samples {
        let z = random_z(d, rng)?;
        let ops = OperatorSet::build(d, z)?;
        let chain = run_chain(d, &ops)?;
        parts.record("divisible by (f - f_zbar)", step(&chain, "step1"));
        let mut conds: Vec<CurveCondition> =
            pts.iter().cloned().map(CurveCondition::Vanish).collect();
        conds.remove(1);
        conds.push(CurveCondition::Vanish(d.point(z)?));
        conds.push(CurveCondition::Vanish(d.point(d.h1 + d.delta() - z + s)?));
        parts.record(
            "coefficients in the L3 condition system",
            membership(&chain.l3, &conds),
        );
        let tangency = chain
            .l3
            .coeffs
            .iter()
            .map(|c| tangent_to_c0(d, c, &pts[0]))
            .collect::<Result<Vec<f64>>>()?;
        parts.record(
            "unassigned point at P1 along C0",
            tangency.into_iter().fold(0.0, f64::max),
        );
        let direct = build_l3(d, z)?;
        parts.record(
            "L3 condition dimension",
            (direct.family_dim as f64 - 3.0).abs(),
        );
        let p = crate::compat::random_evaluation_point(d, rng)?;
        let order = [Slot::Ydot(0), Slot::Y(0), Slot::Y(1)];
        let a = crate::compat::eval_in_order(&chain.l3, &p, &order)?;
        let b = crate::compat::eval_in_order(&direct.op, &p, &order)?;
        parts.record("unique", projective_distance(&a, &b));
    }
    Ok(parts.finish(
        "l3_elimination",
        "L3 from L1, L2 and its characterization",
        samples,
    ))
}

fn normalized_pair(op: &LaxOperator, p: &SurfacePoint, lead: Slot) -> Result<(C64, C64)> {
    let c = |s: Slot| -> Result<C64> {
        Ok(op
            .coeff(s)
            .ok_or_else(|| Error::invalid(format!("missing slot {s}")))?
            .eval(p))
    };
    let l = c(lead)?;
    Ok((-c(Slot::Y(0))? / l, c(Slot::Ydot(0))? / l))
}

/// `(A2, B2)` of `y(z - delta) - A2 y + B2 ydot = 0` at `p`.
pub fn a2_b2(d: &EllipticData, z: C64, p: &SurfacePoint) -> Result<(C64, C64)> {
    normalized_pair(&build_l2(d, z)?.op, p, Slot::Y(-1))
}

/// `(A3, B3)` of `y(z + delta) - A3 y + B3 ydot = 0` at `p`.
pub fn a3_b3(d: &EllipticData, z: C64, p: &SurfacePoint) -> Result<(C64, C64)> {
    normalized_pair(&build_l3(d, z)?.op, p, Slot::Y(1))
}

/// `A3(h1 + delta - z) = A2(z)` and `B3(h1 + delta - z) = B2(z)`.
pub fn shift_symmetry<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    for _ in 0..samples {
        let z = random_z(d, rng)?;
        let p = random_point(d, rng)?;
        let (a2, b2) = a2_b2(d, z, &p)?;
        let (a3, b3) = a3_b3(d, d.h1 + d.delta() - z, &p)?;
        parts.record("A3 = A2", rel(a2, a3));
        parts.record("B3 = B2", rel(b2, b3));
    }
    Ok(parts.finish(
        "shift_symmetry",
        "A3(h1 + delta - z) = A2(z), B3 = B2",
        samples,
    ))
}

fn wave_seed<R: Rng + ?Sized>(rng: &mut R) -> (C64, C64) {
    (unit(rng) + c64(1.2, 0.0), unit(rng) - c64(0.0, 1.1))
}

/// Second elimination: `L4` divides cleanly, lies in the L4 condition system, `K` vanishes on
/// `fdot = f_zbar`, and the dotted waves satisfy the relation defining
/// `Qdot_zbar` there.
pub fn l4_elimination<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    let (h1, delta, s) = (d.h1, d.delta(), d.u[1] - d.u[0]);
    for _ in 0..samples {
        let z = random_z(d, rng)?;
        let zb = z - delta;
        let ops = OperatorSet::build(d, z)?;
        let chain = run_chain(d, &ops)?;
        parts.record("divisible by (f - f_zbar)", step(&chain, "step2"));
        let conds = doubled_conditions(d, 3, &[z + s, h1 + 2.0 * delta - z + s])?;
        parts.record(
            "coefficients in the L4 condition system",
            membership(&chain.l4, &conds),
        );
        let p = level_point(d, d.f_u(zb), rng)?;
        let zp = h1 + 2.0 * delta - z;
        let k = c64(1.0, 0.0) - a2_b2(d, z, &p)?.0 * a2_b2(d, zp, &p)?.0;
        parts.record("K = 0 on fdot = f_zbar", k.norm());
        let gd = fdot(d, &p, rng)?.fg()?.1;
        let w = crate::compat::propagate_waves(&ops, &p, wave_seed(rng))?;
        let lhs = (gd - d.g_u(h1 - zb)) * w.get(Slot::Ydot(0))?;
        let rhs = (gd - d.g_u(zb)) * w.get(Slot::Ydot(-1))?;
        parts.record("Qdot_zbar relation", rel(lhs, rhs));
    }
    Ok(parts.finish(
        "l4_elimination",
        "L4: divisibility, point conditions and wave relation",
        samples,
    ))
}

/// Third elimination, mirror of the second at `fdot = f_z`.
pub fn l5_elimination<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    let (h1, delta, s) = (d.h1, d.delta(), d.u[1] - d.u[0]);
    for _ in 0..samples {
        let z = random_z(d, rng)?;
        let ops = OperatorSet::build(d, z)?;
        let chain = run_chain(d, &ops)?;
        parts.record("divisible by (f - f_z)", step(&chain, "step3"));
        let conds = doubled_conditions(d, 3, &[z + delta + s, h1 + delta - z + s])?;
        parts.record(
            "coefficients in the L5 condition system",
            membership(&chain.l5, &conds),
        );
        let p = level_point(d, d.f_u(z), rng)?;
        let gd = fdot(d, &p, rng)?.fg()?.1;
        let w = crate::compat::propagate_waves(&ops, &p, wave_seed(rng))?;
        let lhs = (gd - d.g_u(h1 - z)) * w.get(Slot::Ydot(1))?;
        let rhs = (gd - d.g_u(z)) * w.get(Slot::Ydot(0))?;
        parts.record("Qdot_z relation", rel(lhs, rhs));
    }
    Ok(parts.finish(
        "l5_elimination",
        "L5: divisibility, point conditions and wave relation",
        samples,
    ))
}

/// Last elimination: `L6` divides cleanly, lies in the L6 condition system, and its
/// coefficients reproduce both `Qdot` relations.
pub fn l6_elimination<R: Rng + ?Sized>(
    d: &EllipticData,
    samples: usize,
    rng: &mut R,
) -> Result<IdentityCheck> {
    let mut parts = Parts::new();
    let (h1, delta, s) = (d.h1, d.delta(), d.u[1] - d.u[0]);
    for _ in 0..samples {
        let z = random_z(d, rng)?;
        let zb = z - delta;
        let ops = OperatorSet::build(d, z)?;
        let chain = run_chain(d, &ops)?;
        parts.record("divisible by (f - f1) phi22", step(&chain, "step4"));
        let mut conds = l6_conditions(d, z)?;
        conds.push(CurveCondition::Vanish(d.point(h1 + 2.0 * delta - z + s)?));
        parts.record(
            "coefficients in the L6 condition system",
            membership(&chain.l6, &conds),
        );
        let coeff = |slot: Slot| {
            chain
                .l6
                .coeff(slot)
                .ok_or_else(|| Error::invalid("L6 slot"))
        };
        // backward error of c_a (g' - g_a') + c_b (g' - g_b') = 0 at a level point
        let mut qdot = |name: &str, zeta: C64, a: Slot, b: Slot, ga: C64, gb: C64| -> Result<()> {
            let p = level_point(d, d.f_u(zeta), rng)?;
            let gd = fdot(d, &p, rng)?.fg()?.1;
            let (ca, cb) = (coeff(a)?, coeff(b)?);
            let (wa, wb) = (gd - ga, gd - gb);
            let num = (ca.eval(&p) * wa + cb.eval(&p) * wb).norm();
            let den =
                ca.partial_scale(&p, 0, 0) * wa.norm() + cb.partial_scale(&p, 0, 0) * wb.norm();
            parts.record(name, if den > 0.0 { num / den } else { 0.0 });
            Ok(())
        };
        qdot(
            "Qdot_z",
            z,
            Slot::Ydot(0),
            Slot::Ydot(1),
            d.g_u(h1 - z),
            d.g_u(z),
        )?;
        qdot(
            "Qdot_zbar",
            zb,
            Slot::Ydot(0),
            Slot::Ydot(-1),
            d.g_u(zb),
            d.g_u(h1 - zb),
        )?;
    }
    Ok(parts.finish(
        "l6_elimination",
        "L6: divisibility, point conditions and wave relation",
        samples,
    ))
}

type IdentityFn = fn(&EllipticData, usize, &mut rand_chacha::ChaCha8Rng) -> Result<IdentityCheck>;

/// Every identity check, in dependency order.
pub const ALL: [(&str, IdentityFn); 13] = [
    ("fdot_level_curve", fdot_level_curve),
    ("phi54_on_level_set", phi54_on_level_set),
    ("pencil_ratio_invariance", pencil_ratio_invariance),
    ("determinant_bidegree", determinant_bidegree),
    ("reduced_determinant", reduced_determinant),
    ("involution_quadratic", involution_quadratic),
    ("involution_derivative", involution_derivative),
    ("cross_ratio_identity", cross_ratio_identity),
    ("l3_elimination", l3_elimination),
    ("shift_symmetry", shift_symmetry),
    ("l4_elimination", l4_elimination),
    ("l5_elimination", l5_elimination),
    ("l6_elimination", l6_elimination),
];

/// Runs every identity with its own generator derived from `seed`.
pub fn run_all(
    d: &EllipticData,
    samples: usize,
    seed: u64,
) -> Vec<(&'static str, Result<IdentityCheck>)> {
    use rand::SeedableRng;
    use rayon::prelude::*;
    ALL.par_iter()
        .enumerate()
        .map(|(k, (name, f))| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            (*name, f(d, samples, &mut rng))
        })
        .collect()
}
