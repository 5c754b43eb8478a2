use crate::curves::bipoly::{local_row, BiPoly};
use crate::error::{Error, Result};
use crate::numerics::{null_space, null_space_of_dim, CMatrix, NullSpace, Series, C64};
use crate::surface::SurfacePoint;

/// Relative singular-value cutoff used when extracting a linear system.
pub const FAMILY_TOL: f64 = 1e-9;

/// Cutoff for reporting dimensions of high-bidegree systems, whose smallest
/// genuine singular values reach `1e-9` relative.
pub const DIMENSION_TOL: f64 = 1e-11;

/// Affine arc `eps -> (f(eps), g(eps))` given by truncated power series.
#[derive(Debug, Clone)]
pub struct Arc {
    pub f: Series,
    pub g: Series,
}

/// Linear condition on the coefficients of a curve.
#[derive(Debug, Clone)]
pub enum CurveCondition {
    /// Passes through the point.
    Vanish(SurfacePoint),
    /// Vanishes to order `k` at the point: `k(k+1)/2` conditions.
    Multiplicity(SurfacePoint, usize),
    /// `d/dg` vanishes at the point (tangent to the vertical line there).
    LineTangencyF(SurfacePoint),
    /// Restriction to the arc is `O(eps^order)`: `order` conditions.
    JetVanish(Arc, usize),
}

impl CurveCondition {
    pub fn count(&self) -> usize {
        match self {
            CurveCondition::Vanish(_) | CurveCondition::LineTangencyF(_) => 1,
            CurveCondition::Multiplicity(_, k) => k * (k + 1) / 2,
            CurveCondition::JetVanish(_, order) => *order,
        }
    }

    /// Largest `|row . c| / (|row| |c|)` over the condition's functionals.
    pub fn residual(&self, p: &BiPoly) -> f64 {
        let cn = p.norm();
        if cn == 0.0 {
            return 0.0;
        }
        self.rows(p.m(), p.n())
            .iter()
            .map(|row| {
                let rn = row.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                let v: C64 = row.iter().zip(p.coeffs()).map(|(a, b)| a * b).sum();
                if rn == 0.0 {
                    0.0
                } else {
                    v.norm() / (rn * cn)
                }
            })
            .fold(0.0, f64::max)
    }

    fn rows(&self, m: usize, n: usize) -> Vec<Vec<C64>> {
        match self {
            CurveCondition::Vanish(p) => vec![local_row(m, n, p, 0, 0)],
            CurveCondition::LineTangencyF(p) => vec![local_row(m, n, p, 0, 1)],
            CurveCondition::Multiplicity(p, k) => {
                let mut rows = Vec::new();
                for a in 0..*k {
                    for b in 0..(*k - a) {
                        rows.push(local_row(m, n, p, a, b));
                    }
                }
                rows
            }
            CurveCondition::JetVanish(arc, order) => jet_rows(m, n, arc, *order),
        }
    }
}

fn jet_rows(m: usize, n: usize, arc: &Arc, order: usize) -> Vec<Vec<C64>> {
    let len = order.max(1);
    let f = arc.f.resized(len);
    let g = arc.g.resized(len);
    let fp: Vec<Series> = (0..=m).map(|i| f.powi(i)).collect();
    let gp: Vec<Series> = (0..=n).map(|j| g.powi(j)).collect();
    let mut rows = vec![Vec::with_capacity((m + 1) * (n + 1)); order];
    for fi in fp.iter() {
        for gj in gp.iter() {
            let prod = fi * gj;
            for (k, row) in rows.iter_mut().enumerate() {
                row.push(prod.coeff(k));
            }
        }
    }
    rows
}

/// Basis of a linear system of curves with diagnostics.
#[derive(Debug, Clone)]
pub struct CurveFamily {
    pub m: usize,
    pub n: usize,
    pub basis: Vec<BiPoly>,
    pub singular_values: Vec<f64>,
    /// `(m+1)(n+1) - #conditions`, clamped at zero.
    pub expected_dim: usize,
    /// Largest `|row . c|` over unit rows and unit basis vectors.
    pub max_condition_residual: f64,
}

impl CurveFamily {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn dimension_matches(&self) -> bool {
        self.dim() == self.expected_dim
    }

    /// The unique member of a one-dimensional system, normalized.
    pub fn unique(&self, what: &str) -> Result<BiPoly> {
        if self.dim() != 1 {
            return Err(Error::Dimension {
                what: what.to_string(),
                expected: 1,
                observed: self.dim(),
            });
        }
        Ok(self.basis[0].normalized())
    }
}

/// Affine change `f = cf + sf f'`, `g = cg + sg g'` centering the condition
/// points; keeps the monomial basis well conditioned.
#[derive(Debug, Clone, Copy)]
struct Frame {
    cf: C64,
    sf: f64,
    cg: C64,
    sg: f64,
}

impl Frame {
    fn fit(conditions: &[CurveCondition]) -> Self {
        let mut fs = Vec::new();
        let mut gs = Vec::new();
        for c in conditions {
            match c {
                CurveCondition::Vanish(p)
                | CurveCondition::Multiplicity(p, _)
                | CurveCondition::LineTangencyF(p) => {
                    fs.extend(p.f().filter(|v| v.norm() < FRAME_BOUND));
                    gs.extend(p.g().filter(|v| v.norm() < FRAME_BOUND));
                }
                CurveCondition::JetVanish(arc, _) => {
                    fs.push(arc.f.coeff(0));
                    gs.push(arc.g.coeff(0));
                }
            }
        }
        let (cf, sf) = center_spread(&fs);
        let (cg, sg) = center_spread(&gs);
        Self { cf, sf, cg, sg }
    }

    fn point(&self, p: &SurfacePoint) -> SurfacePoint {
        let x = [(p.x[0] - p.x[1] * self.cf) / self.sf, p.x[1]];
        let y = [(p.y[0] - p.y[1] * self.cg) / self.sg, p.y[1]];
        SurfacePoint {
            x,
            y,
            param: p.param,
        }
    }

    fn condition(&self, c: &CurveCondition) -> CurveCondition {
        match c {
            CurveCondition::Vanish(p) => CurveCondition::Vanish(self.point(p)),
            CurveCondition::Multiplicity(p, k) => CurveCondition::Multiplicity(self.point(p), *k),
            CurveCondition::LineTangencyF(p) => CurveCondition::LineTangencyF(self.point(p)),
            CurveCondition::JetVanish(arc, k) => {
                let len = arc.f.len();
                let f = &arc.f - &Series::constant(self.cf, len);
                let g = &arc.g - &Series::constant(self.cg, arc.g.len());
                CurveCondition::JetVanish(
                    Arc {
                        f: f.scale(C64::new(1.0 / self.sf, 0.0)),
                        g: g.scale(C64::new(1.0 / self.sg, 0.0)),
                    },
                    *k,
                )
            }
        }
    }

    /// Coefficients of `p'((f - cf)/sf, (g - cg)/sg)` in the original monomials.
    fn unframe(&self, p: &BiPoly) -> BiPoly {
        let tf = shift_matrix(p.m(), self.cf, self.sf);
        let tg = shift_matrix(p.n(), self.cg, self.sg);
        BiPoly::from_fn(p.m(), p.n(), |k, l| {
            let mut acc = C64::new(0.0, 0.0);
            for i in k..=p.m() {
                for j in l..=p.n() {
                    acc += p.coeff(i, j) * tf[i][k] * tg[j][l];
                }
            }
            acc
        })
    }
}

const FRAME_BOUND: f64 = 1e3;

fn center_spread(v: &[C64]) -> (C64, f64) {
    if v.len() < 2 {
        return (C64::new(0.0, 0.0), 1.0);
    }
    let c = v.iter().sum::<C64>() / v.len() as f64;
    let s = (v.iter().map(|x| (x - c).norm_sqr()).sum::<f64>() / v.len() as f64).sqrt();
    if s > 1e-6 {
        (c, s)
    } else {
        (C64::new(0.0, 0.0), 1.0)
    }
}

/// `t[i][k]`: coefficient of `x^k` in `((x - c)/s)^i`.
fn shift_matrix(deg: usize, c: C64, s: f64) -> Vec<Vec<C64>> {
    let mut t = vec![vec![C64::new(0.0, 0.0); deg + 1]; deg + 1];
    t[0][0] = C64::new(1.0, 0.0);
    for i in 1..=deg {
        for k in 0..=i {
            let up = if k > 0 {
                t[i - 1][k - 1]
            } else {
                C64::new(0.0, 0.0)
            };
            t[i][k] = (up - t[i - 1][k] * c) / s;
        }
    }
    t
}

/// Null space of the stacked, row-normalized condition matrix, computed in
/// centered coordinates.
pub fn build_family(
    m: usize,
    n: usize,
    conditions: &[CurveCondition],
    tol: f64,
) -> Result<CurveFamily> {
    let sys = System::assemble(m, n, conditions)?;
    let ns = null_space(&sys.mat, tol)?;
    if ns.dim() == 0 {
        return Err(Error::NoCurve {
            expected: sys.expected_dim,
        });
    }
    let fam = sys.finish(ns)?;
    // dependent conditions are routine (forced base points, interpolation)
    if fam.dim() != fam.expected_dim {
        log::debug!(
            "curve family of bidegree ({m},{n}): expected dimension {}, observed {}",
            fam.expected_dim,
            fam.dim()
        );
    }
    Ok(fam)
}

/// Kept/dropped singular value ratio required by [`build_family_of_dim`].
pub const FAMILY_MIN_GAP: f64 = 1e3;

/// The `dim`-dimensional family spanned by the smallest singular directions.
/// For systems whose dimension is known; fails unless the spectrum has a
/// clear gap at `dim`.
pub fn build_family_of_dim(
    m: usize,
    n: usize,
    conditions: &[CurveCondition],
    dim: usize,
) -> Result<CurveFamily> {
    let sys = System::assemble(m, n, conditions)?;
    let ns = null_space_of_dim(&sys.mat, dim)?;
    let gap = ns.gap();
    let tail = ns.singular_values[ns.rank];
    if gap < FAMILY_MIN_GAP || tail > FAMILY_TOL {
        return Err(Error::degenerate(format!(
            "no clear {dim}-dimensional family of bidegree ({m},{n}): gap {gap:.1e}, tail {tail:.1e}"
        )));
    }
    sys.finish(ns)
}

struct System {
    m: usize,
    n: usize,
    frame: Frame,
    rows: Vec<Vec<C64>>,
    mat: CMatrix,
    expected_dim: usize,
}

impl System {
    fn assemble(m: usize, n: usize, conditions: &[CurveCondition]) -> Result<Self> {
        let cols = (m + 1) * (n + 1);
        let frame = Frame::fit(conditions);
        let mut rows: Vec<Vec<C64>> = Vec::new();
        for c in conditions {
            for mut row in frame.condition(c).rows(m, n) {
                let norm = row.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                if !norm.is_finite() {
                    return Err(Error::degenerate("non-finite condition row"));
                }
                if norm > 0.0 {
                    row.iter_mut().for_each(|x| *x /= norm);
                }
                rows.push(row);
            }
        }
        let count: usize = conditions.iter().map(|c| c.count()).sum();
        let mat = CMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]);
        Ok(Self {
            m,
            n,
            frame,
            rows,
            mat,
            expected_dim: cols.saturating_sub(count),
        })
    }

    fn finish(self, ns: NullSpace) -> Result<CurveFamily> {
        let mut max_res: f64 = 0.0;
        for v in &ns.basis {
            for row in &self.rows {
                let r: C64 = row.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
                max_res = max_res.max(r.norm());
            }
        }
        let basis: Vec<BiPoly> = ns
            .basis
            .iter()
            .map(|v| {
                BiPoly::from_coeffs(self.m, self.n, v.iter().copied().collect()).map(|b| {
                    let b = self.frame.unframe(&b);
                    let nrm = b.norm();
                    b.scale(C64::new(1.0 / nrm, 0.0))
                })
            })
            .collect::<Result<_>>()?;
        Ok(CurveFamily {
            m: self.m,
            n: self.n,
            basis,
            singular_values: ns.singular_values,
            expected_dim: self.expected_dim,
            max_condition_residual: max_res,
        })
    }
}

/// For each candidate point, whether every member of the family passes
/// through it (unit value functional against unit coefficient vectors).
pub fn detect_base_points(
    family: &CurveFamily,
    candidates: &[SurfacePoint],
    tol: f64,
) -> Vec<(SurfacePoint, bool)> {
    candidates
        .iter()
        .map(|p| {
            let row = local_row(family.m, family.n, p, 0, 0);
            let norm = row.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let on = family.basis.iter().all(|b| {
                let v: C64 = row.iter().zip(b.coeffs()).map(|(x, y)| x * y).sum();
                v.norm() <= tol * norm * b.norm()
            });
            (p.clone(), on)
        })
        .collect()
}
