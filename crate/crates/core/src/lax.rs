//! Lax operators as curves of bidegree (3,2): `L1`, `L2`, the direct `L3`,
//! the polynomials `F32` and `phi54`, and the 12x12 determinant `D` with its
//! derived evaluators.

use std::collections::BTreeMap;
use std::fmt;

use crate::curves::{build_family, BiPoly, CurveCondition, FAMILY_TOL};
use crate::error::{Error, Result};
use crate::numerics::{c64, least_squares, null_space, projective_distance, CMatrix, CVector, C64};
use crate::surface::{EllipticData, SurfacePoint};

/// Shift slot: `Y(k)` is `y(z + k delta)`, `Ydot(k)` is `T(y)(z + k delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Y(i32),
    Ydot(i32),
}

impl Slot {
    pub fn shifted(self, k: i32) -> Slot {
        match self {
            Slot::Y(j) => Slot::Y(j + k),
            Slot::Ydot(j) => Slot::Ydot(j + k),
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Y(k) => write!(f, "y({k:+})"),
            Slot::Ydot(k) => write!(f, "ydot({k:+})"),
        }
    }
}

/// Wave values keyed by slot, all at one spectral parameter `z`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Waves {
    values: BTreeMap<Slot, C64>,
}

impl Waves {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, slot: Slot, v: C64) -> Self {
        self.values.insert(slot, v);
        self
    }

    pub fn insert(&mut self, slot: Slot, v: C64) {
        self.values.insert(slot, v);
    }

    pub fn get(&self, slot: Slot) -> Result<C64> {
        self.values
            .get(&slot)
            .copied()
            .ok_or_else(|| Error::WaveDegeneracy(format!("missing wave value {slot}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Slot, &C64)> {
        self.values.iter()
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            values: self.values.iter().map(|(k, v)| (*k, v * s)).collect(),
        }
    }
}

/// Three-term linear relation `sum coeffs[k] * slot_k = 0` with polynomial
/// coefficients in `(f, g)`.
#[derive(Debug, Clone)]
pub struct LaxOperator {
    pub slots: [Slot; 3],
    pub coeffs: [BiPoly; 3],
}

impl LaxOperator {
    pub fn coeff(&self, slot: Slot) -> Option<&BiPoly> {
        self.slots
            .iter()
            .position(|s| *s == slot)
            .map(|i| &self.coeffs[i])
    }

    /// Coefficient values at a point.
    pub fn eval(&self, p: &SurfacePoint) -> [C64; 3] {
        [
            self.coeffs[0].eval(p),
            self.coeffs[1].eval(p),
            self.coeffs[2].eval(p),
        ]
    }

    /// Operator for the same relation with slots relabelled by `k` shifts.
    pub fn shifted(&self, k: i32) -> Self {
        Self {
            slots: self.slots.map(|s| s.shifted(k)),
            coeffs: self.coeffs.clone(),
        }
    }

    /// Scaled so that the largest coefficient over all slots is one.
    pub fn normalized(&self) -> Self {
        let (mut best, mut pick) = (0.0, c64(1.0, 0.0));
        for p in &self.coeffs {
            for c in p.coeffs() {
                if c.norm() > best {
                    best = c.norm();
                    pick = *c;
                }
            }
        }
        if best == 0.0 {
            return self.clone();
        }
        let s = pick.inv();
        Self {
            slots: self.slots,
            coeffs: [
                self.coeffs[0].scale(s),
                self.coeffs[1].scale(s),
                self.coeffs[2].scale(s),
            ],
        }
    }

    /// Relative residual `|sum c_k w_k| / sum |c_k w_k|` at a point.
    pub fn residual(&self, p: &SurfacePoint, waves: &Waves) -> Result<f64> {
        let c = self.eval(p);
        let mut num = c64(0.0, 0.0);
        let mut den = 0.0;
        for (k, slot) in self.slots.iter().enumerate() {
            let t = c[k] * waves.get(*slot)?;
            num += t;
            den += t.norm();
        }
        Ok(if den == 0.0 { 0.0 } else { num.norm() / den })
    }

    /// Solves the relation at `p` for the value in `slot`.
    pub fn solve_for(&self, slot: Slot, p: &SurfacePoint, waves: &Waves) -> Result<C64> {
        let c = self.eval(p);
        let idx = self
            .slots
            .iter()
            .position(|s| *s == slot)
            .ok_or_else(|| Error::invalid(format!("operator has no slot {slot}")))?;
        let scale: f64 = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if c[idx].norm() <= 1e-12 * scale {
            return Err(Error::WaveDegeneracy(format!(
                "coefficient of {slot} vanishes"
            )));
        }
        let mut rest = c64(0.0, 0.0);
        for (k, s) in self.slots.iter().enumerate() {
            if k != idx {
                rest += c[k] * waves.get(*s)?;
            }
        }
        Ok(-rest / c[idx])
    }

    /// The curve obtained by substituting wave values.
    pub fn curve(&self, waves: &Waves) -> Result<BiPoly> {
        let w: Vec<C64> = self
            .slots
            .iter()
            .map(|s| waves.get(*s))
            .collect::<Result<_>>()?;
        BiPoly::linear_combine(&w, &[&self.coeffs[0], &self.coeffs[1], &self.coeffs[2]])
    }
}

/// Point `{f = f0} cap {(g - ga) wa = (g - gb) wb}`.
pub fn q_point(f0: C64, ga: C64, wa: C64, gb: C64, wb: C64) -> Result<SurfacePoint> {
    let den = wa - wb;
    if den.norm() <= 1e-10 * (wa.norm() + wb.norm()) {
        return Err(Error::WaveDegeneracy(
            "equal wave values in a Q-point".into(),
        ));
    }
    Ok(SurfacePoint::affine(f0, (ga * wa - gb * wb) / den))
}

/// `Q_z`, `Q_zbar` (with `zbar = z - delta`) and `Q_u1`.
#[derive(Debug, Clone)]
pub struct QPoints {
    pub qz: SurfacePoint,
    pub qzbar: SurfacePoint,
    pub qu1: SurfacePoint,
}

fn qz(d: &EllipticData, z: C64, y0: C64, yplus: C64) -> Result<SurfacePoint> {
    q_point(d.f_u(z), d.g_u(z), y0, d.g_u(d.h1 - z), yplus)
}

fn qzbar(d: &EllipticData, z: C64, yminus: C64, y0: C64) -> Result<SurfacePoint> {
    let zb = z - d.delta();
    q_point(d.f_u(zb), d.g_u(zb), yminus, d.g_u(d.h1 - zb), y0)
}

fn qu1(d: &EllipticData, y0: C64, ydot: C64) -> Result<SurfacePoint> {
    let u1 = d.u[0];
    q_point(d.f_u(u1), d.g_u(u1), y0, d.g_u(d.h1 - u1), ydot)
}

pub fn q_points(d: &EllipticData, z: C64, w: &Waves) -> Result<QPoints> {
    let (ym, y0, yp, yd) = (
        w.get(Slot::Y(-1))?,
        w.get(Slot::Y(0))?,
        w.get(Slot::Y(1))?,
        w.get(Slot::Ydot(0))?,
    );
    Ok(QPoints {
        qz: qz(d, z, y0, yp)?,
        qzbar: qzbar(d, z, ym, y0)?,
        qu1: qu1(d, y0, yd)?,
    })
}

/// Which operator to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    L1,
    L2,
    L3,
}

impl OperatorKind {
    pub fn slots(self) -> [Slot; 3] {
        match self {
            OperatorKind::L1 => [Slot::Y(-1), Slot::Y(0), Slot::Y(1)],
            OperatorKind::L2 => [Slot::Y(-1), Slot::Y(0), Slot::Ydot(0)],
            OperatorKind::L3 => [Slot::Ydot(0), Slot::Y(0), Slot::Y(1)],
        }
    }

    /// Parameters of the simple base points of the (3,2) family.
    pub fn base_parameters(self, d: &EllipticData, z: C64) -> Vec<C64> {
        let (delta, h1) = (d.delta(), d.h1);
        let (u1, u2) = (d.u[0], d.u[1]);
        let mut ps = vec![u1];
        match self {
            OperatorKind::L1 => {
                ps.push(u2);
                ps.extend_from_slice(&d.u[2..]);
                ps.push(z);
            }
            OperatorKind::L2 => {
                ps.extend_from_slice(&d.u[2..]);
                ps.push(z + u2 - u1);
                ps.push(h1 + delta - z);
            }
            OperatorKind::L3 => {
                ps.extend_from_slice(&d.u[2..]);
                ps.push(z);
                ps.push(h1 + delta - z - u1 + u2);
            }
        }
        ps
    }

    /// The two closing Q-points for wave values in slot order.
    fn closing_points(self, d: &EllipticData, z: C64, w: [C64; 3]) -> Result<[SurfacePoint; 2]> {
        match self {
            OperatorKind::L1 => Ok([qz(d, z, w[1], w[2])?, qzbar(d, z, w[0], w[1])?]),
            OperatorKind::L2 => Ok([qzbar(d, z, w[0], w[1])?, qu1(d, w[1], w[2])?]),
            OperatorKind::L3 => Ok([qu1(d, w[1], w[0])?, qz(d, z, w[1], w[2])?]),
        }
    }
}

/// Built operator with construction diagnostics.
#[derive(Debug, Clone)]
pub struct LaxBuild {
    pub op: LaxOperator,
    /// Dimension of the base (3,2) family before the Q-point conditions.
    pub family_dim: usize,
    /// Ratio of the smallest kept to the largest discarded singular value
    /// of the base family.
    pub family_gap: f64,
    /// Least-squares residual of the fourth seed against the first three.
    pub linearity_residual: f64,
    /// Projective distance of a fifth seed's curve from the superposition.
    pub superposition_residual: f64,
}

const SEEDS: [[(f64, f64); 3]; 5] = [
    [(1.0, 0.0), (0.37, 0.2), (-0.61, 0.45)],
    [(-0.3, 0.8), (1.0, 0.0), (0.52, -0.33)],
    [(0.44, -0.71), (-0.58, 0.1), (1.0, 0.0)],
    [(0.9, 0.3), (-0.2, -0.6), (0.7, 0.5)],
    [(-0.5, 0.25), (0.8, 0.1), (-0.35, -0.9)],
];

fn seed(k: usize) -> [C64; 3] {
    SEEDS[k].map(|(a, b)| c64(a, b))
}

/// Base family of an operator kind at spectral parameter `z`.
pub fn base_family(
    d: &EllipticData,
    z: C64,
    kind: OperatorKind,
) -> Result<crate::curves::CurveFamily> {
    let conds: Vec<CurveCondition> = kind
        .base_parameters(d, z)
        .into_iter()
        .map(|u| d.point(u).map(CurveCondition::Vanish))
        .collect::<Result<_>>()?;
    build_family(3, 2, &conds, FAMILY_TOL)
}

fn unit_row(p: &SurfacePoint, basis: &[BiPoly]) -> Vec<C64> {
    let row: Vec<C64> = basis.iter().map(|b| b.eval(p)).collect();
    let n = row.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    row.into_iter().map(|x| x / n).collect()
}

/// The curve for given wave values: the base-family member through the two
/// closing Q-points.
pub fn operator_curve(
    d: &EllipticData,
    z: C64,
    kind: OperatorKind,
    waves: [C64; 3],
) -> Result<BiPoly> {
    let fam = base_family(d, z, kind)?;
    curve_in_family(d, z, kind, &fam.basis, waves)
}

fn curve_in_family(
    d: &EllipticData,
    z: C64,
    kind: OperatorKind,
    basis: &[BiPoly],
    waves: [C64; 3],
) -> Result<BiPoly> {
    let [qa, qb] = kind.closing_points(d, z, waves)?;
    let ra = unit_row(&qa, basis);
    let rb = unit_row(&qb, basis);
    let m = CMatrix::from_fn(2, basis.len(), |r, c| if r == 0 { ra[c] } else { rb[c] });
    let ns = null_space(&m, FAMILY_TOL)?;
    if ns.dim() != 1 {
        return Err(Error::Dimension {
            what: format!("{kind:?} curve"),
            expected: 1,
            observed: ns.dim(),
        });
    }
    let v = &ns.basis[0];
    let refs: Vec<&BiPoly> = basis.iter().collect();
    let combo: Vec<C64> = v.iter().copied().collect();
    let p = BiPoly::linear_combine(&combo, &refs)?;
    Ok(p.scale(c64(1.0 / p.norm(), 0.0)))
}

/// Builds `L1`, `L2` or `L3` at spectral parameter `z` and decomposes the
/// wave-dependent curve into per-slot coefficients.
pub fn build_operator(d: &EllipticData, z: C64, kind: OperatorKind) -> Result<LaxBuild> {
    let fam = base_family(d, z, kind)?;
    if fam.dim() != 3 {
        return Err(Error::Dimension {
            what: format!("{kind:?} base family"),
            expected: 3,
            observed: fam.dim(),
        });
    }
    let sv = &fam.singular_values;
    let kept = sv.len() - fam.dim();
    let family_gap = if kept > 0 && kept < sv.len() {
        sv[kept - 1] / sv[kept].max(1e-300)
    } else {
        f64::INFINITY
    };
    let curves: Vec<BiPoly> = (0..5)
        .map(|k| curve_in_family(d, z, kind, &fam.basis, seed(k)))
        .collect::<Result<_>>()?;
    let ncoef = curves[0].coeffs().len();
    let v = CMatrix::from_fn(ncoef, 3, |r, c| curves[c].coeffs()[r]);
    let v4 = CVector::from_column_slice(curves[3].coeffs());
    let (mu, linearity_residual) = least_squares(&v, &v4)?;
    let w = CMatrix::from_fn(3, 3, |r, c| seed(c)[r]);
    let w4 = CVector::from_column_slice(&seed(3));
    let winv = w
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::degenerate("wave seeds are dependent"))?;
    let cw = &winv * &w4;
    // columns v_k / lambda_k with lambda_k / lambda_4 = cw_k / mu_k
    let mut u = CMatrix::zeros(ncoef, 3);
    for k in 0..3 {
        if cw[k].norm() < 1e-12 {
            return Err(Error::degenerate("wave seed decomposition is singular"));
        }
        let s = mu[k] / cw[k];
        for r in 0..ncoef {
            u[(r, k)] = v[(r, k)] * s;
        }
    }
    let cmat = &u * &winv;
    let coeffs: [BiPoly; 3] = std::array::from_fn(|j| {
        BiPoly::from_coeffs(3, 2, cmat.column(j).iter().copied().collect()).expect("bidegree (3,2)")
    });
    let op = LaxOperator {
        slots: kind.slots(),
        coeffs,
    }
    .normalized();
    let w5 = seed(4);
    let recombined = BiPoly::linear_combine(&w5, &[&op.coeffs[0], &op.coeffs[1], &op.coeffs[2]])?;
    let superposition_residual = recombined.projective_distance(&curves[4]);
    Ok(LaxBuild {
        op,
        family_dim: fam.dim(),
        family_gap,
        linearity_residual,
        superposition_residual,
    })
}

pub fn build_l1(d: &EllipticData, z: C64) -> Result<LaxBuild> {
    build_operator(d, z, OperatorKind::L1)
}

pub fn build_l2(d: &EllipticData, z: C64) -> Result<LaxBuild> {
    build_operator(d, z, OperatorKind::L2)
}

pub fn build_l3(d: &EllipticData, z: C64) -> Result<LaxBuild> {
    build_operator(d, z, OperatorKind::L3)
}

/// Unique member of `Phi32(P1^2 P3..P8 P_zeta)` tangent to `f = f_zeta` at
/// `P_zeta`.
pub fn build_f32(d: &EllipticData, zeta: C64) -> Result<BiPoly> {
    let pts = d.base_points()?;
    let pz = d.point(zeta)?;
    let mut conds = vec![CurveCondition::Multiplicity(pts[0].clone(), 2)];
    conds.extend(pts[2..].iter().cloned().map(CurveCondition::Vanish));
    conds.push(CurveCondition::Vanish(pz.clone()));
    conds.push(CurveCondition::LineTangencyF(pz));
    build_family(3, 2, &conds, FAMILY_TOL)?.unique("F32")
}

/// Unique member of `Phi54(P1^4 P3^2..P8^2 P_{zeta + delta - u1 + u2})`.
pub fn build_phi54(d: &EllipticData, zeta: C64) -> Result<BiPoly> {
    phi54_family(d, zeta)?.unique("phi54")
}

pub fn phi54_family(d: &EllipticData, zeta: C64) -> Result<crate::curves::CurveFamily> {
    let pts = d.base_points()?;
    let mut conds = vec![CurveCondition::Multiplicity(pts[0].clone(), 4)];
    conds.extend(
        pts[2..]
            .iter()
            .cloned()
            .map(|p| CurveCondition::Multiplicity(p, 2)),
    );
    conds.push(CurveCondition::Vanish(
        d.point(zeta + d.delta() - d.u[0] + d.u[1])?,
    ));
    build_family(5, 4, &conds, FAMILY_TOL)
}

/// `phi32`: member of `Phi32(P1..P8 P_z)` tangent to `f = f_z` at `P_z` and to
/// `f = f_{zbar}` at `P_{h1 - zbar}`.
pub fn build_phi32(d: &EllipticData, z: C64) -> Result<BiPoly> {
    let mut conds: Vec<CurveCondition> = d
        .base_points()?
        .into_iter()
        .map(CurveCondition::Vanish)
        .collect();
    let pz = d.point(z)?;
    let pw = d.point(d.h1 - z + d.delta())?;
    conds.push(CurveCondition::Vanish(pz.clone()));
    conds.push(CurveCondition::LineTangencyF(pz));
    conds.push(CurveCondition::Vanish(pw.clone()));
    conds.push(CurveCondition::LineTangencyF(pw));
    build_family(3, 2, &conds, FAMILY_TOL)?.unique("phi32")
}

/// Monomials `f^i g^j`, `i <= 3`, `j <= 2`, in `BiPoly` order, and partials.
fn monomial_row(f: C64, g: C64, df: usize, dg: usize) -> [C64; 12] {
    use crate::curves::monomial_derivative as md;
    let mut row = [c64(0.0, 0.0); 12];
    for i in 0..=3 {
        for j in 0..=2 {
            row[i * 3 + j] = md(f, i, df) * md(g, j, dg);
        }
    }
    row
}

/// The eleven rows of `D` other than `m_P`.
fn d_rows(d: &EllipticData, q: (C64, C64)) -> Result<Vec<[C64; 12]>> {
    let pts = d.base_points()?;
    let (f1, g1) = pts[0].fg()?;
    let mut rows = vec![
        monomial_row(f1, g1, 0, 0),
        monomial_row(f1, g1, 1, 0),
        monomial_row(f1, g1, 0, 1),
    ];
    for p in &pts[2..] {
        let (f, g) = p.fg()?;
        rows.push(monomial_row(f, g, 0, 0));
    }
    rows.push(monomial_row(q.0, q.1, 0, 0));
    rows.push(monomial_row(q.0, q.1, 0, 1));
    Ok(rows)
}

/// The 12x12 determinant `m_P1 ^ dm_P1/df ^ dm_P1/dg ^ m_P3 ^ .. ^ m_P8 ^ m_P ^ m_Q ^ dm_Q/dy`.
pub fn det_d(d: &EllipticData, p: (C64, C64), q: (C64, C64)) -> Result<C64> {
    let mut rows = d_rows(d, q)?;
    rows.insert(9, monomial_row(p.0, p.1, 0, 0));
    let m = CMatrix::from_fn(12, 12, |r, c| rows[r][c]);
    let det = m.determinant();
    if !crate::numerics::is_finite(det) {
        return Err(Error::degenerate("non-finite determinant"));
    }
    Ok(det)
}

/// `D / (x - f1)`.
pub fn script_f(d: &EllipticData, p: (C64, C64), q: (C64, C64)) -> Result<C64> {
    let f1 = d.f_u(d.u[0]);
    let den = q.0 - f1;
    if den.norm() < 1e-12 {
        return Err(Error::degenerate("script F evaluated on x = f1"));
    }
    Ok(det_d(d, p, q)? / den)
}

/// `script F` as a polynomial in `P` for fixed `Q`, up to scale.
pub fn script_f_poly(d: &EllipticData, q: (C64, C64)) -> Result<BiPoly> {
    let rows = d_rows(d, q)?;
    let m = CMatrix::from_fn(11, 12, |r, c| {
        let n = rows[r].iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        rows[r][c] / n
    });
    let ns = null_space(&m, FAMILY_TOL)?;
    if ns.dim() != 1 {
        return Err(Error::Dimension {
            what: "script F".into(),
            expected: 1,
            observed: ns.dim(),
        });
    }
    Ok(BiPoly::from_coeffs(3, 2, ns.basis[0].iter().copied().collect())?.normalized())
}

/// Reference offset of the auxiliary `g` used to evaluate `G`.
const G_PROBE: (f64, f64) = (0.8, 0.45);

/// `G(Q) = D / ((g - g1)^2 (x - f1)^2)` at `P = (f1, g)`, evaluated at
/// `g = g1 + offset`.
pub fn poly_g_with(d: &EllipticData, q: (C64, C64), offset: C64) -> Result<C64> {
    let (f1, g1) = (d.f_u(d.u[0]), d.g_u(d.u[0]));
    let dx = q.0 - f1;
    if dx.norm() < 1e-12 || offset.norm() < 1e-12 {
        return Err(Error::degenerate("G evaluated on a removable singularity"));
    }
    Ok(det_d(d, (f1, g1 + offset), q)? / (offset * offset * dx * dx))
}

pub fn poly_g(d: &EllipticData, q: (C64, C64)) -> Result<C64> {
    poly_g_with(d, q, c64(G_PROBE.0, G_PROBE.1))
}

/// Coefficients of the involution on the fibre `f = x`:
/// `y~ = -(A + B y)/(B + C y)`, i.e. `A + B (y + y~) + C y y~ = 0`.
#[derive(Debug, Clone, Copy)]
pub struct AbcFit {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    /// Ratio of the smallest to the second-smallest singular value of the fit.
    pub residual: f64,
}

impl AbcFit {
    pub fn image(&self, y: C64) -> C64 {
        -(self.a + self.b * y) / (self.b + self.c * y)
    }

    pub fn quadratic(&self, y: C64) -> C64 {
        self.a + self.b * y * 2.0 + self.c * y * y
    }
}

/// Fits `(A, B, C)` from samples of the involution `r` at `f = x`, scaled so
/// that `A + 2By + Cy^2` matches `G(x, y)` in the least-squares sense.
pub fn abc_coefficients(d: &EllipticData, x: C64, ys: &[C64]) -> Result<AbcFit> {
    if ys.len() < 3 {
        return Err(Error::invalid("abc fit needs at least three samples"));
    }
    let mut rows = Vec::new();
    for &y in ys {
        let yt = crate::dynamics::involution_r(d, &SurfacePoint::affine(x, y))?
            .fg()?
            .1;
        let r = [c64(1.0, 0.0), y + yt, y * yt];
        let n = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        rows.push(r.map(|v| v / n));
    }
    let m = CMatrix::from_fn(rows.len(), 3, |r, c| rows[r][c]);
    let ns = null_space(&m, 1e-6)?;
    if ns.dim() != 1 {
        return Err(Error::Dimension {
            what: "involution fit".into(),
            expected: 1,
            observed: ns.dim(),
        });
    }
    let v = &ns.basis[0];
    let sv = &ns.singular_values;
    let residual = if sv.len() >= 3 && sv[1] > 0.0 {
        sv[2] / sv[1]
    } else {
        0.0
    };
    let mut fit = AbcFit {
        a: v[0],
        b: v[1],
        c: v[2],
        residual,
    };
    let gs: Vec<C64> = ys
        .iter()
        .map(|&y| poly_g(d, (x, y)))
        .collect::<Result<_>>()?;
    let qs: Vec<C64> = ys.iter().map(|&y| fit.quadratic(y)).collect();
    let num: C64 = qs.iter().zip(&gs).map(|(q, g)| q.conj() * g).sum();
    let den: f64 = qs.iter().map(|q| q.norm_sqr()).sum();
    let s = num / den;
    fit.a *= s;
    fit.b *= s;
    fit.c *= s;
    Ok(fit)
}

/// Projective distance between `G(x, y_k)` and `A + 2B y_k + C y_k^2`.
pub fn g_quadratic_mismatch(d: &EllipticData, fit: &AbcFit, x: C64, ys: &[C64]) -> Result<f64> {
    let gs: Vec<C64> = ys
        .iter()
        .map(|&y| poly_g(d, (x, y)))
        .collect::<Result<_>>()?;
    let qs: Vec<C64> = ys.iter().map(|&y| fit.quadratic(y)).collect();
    Ok(projective_distance(&gs, &qs))
}
