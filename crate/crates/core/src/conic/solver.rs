//! Dense primal-dual interior-point solver on the homogeneous self-dual
//! embedding, with Nesterov-Todd scaling for the nonnegative orthant and
//! second-order cones and a Mehrotra predictor-corrector step. Per-iteration
//! cost is O(m n^2) for the normal-equations product plus O(n^3) for its
//! Cholesky factorization; iteration counts are typically 10-40.

use crate::linalg::{RMat, RVec};

use super::program::{assemble, ConeBlock, ConeProgram, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    Unbounded,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: RVec,
    pub objective: f64,
    pub status: SolveStatus,
    /// Worst constraint violation of `x` on the original blocks.
    pub primal_residual: f64,
    /// Relative dual residual (certificate quality for infeasible statuses).
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy)]
enum Cone {
    Nonneg(usize),
    Soc(usize),
}

impl Cone {
    fn dim(&self) -> usize {
        match *self {
            Cone::Nonneg(d) | Cone::Soc(d) => d,
        }
    }
}

/// min c'x s.t. Ax + s = b, s in K.
struct Standard {
    a: RMat,
    b: RVec,
    c: RVec,
    cones: Vec<Cone>,
    /// Column scaling: original x = col_scale .* scaled x.
    col_scale: RVec,
}

fn to_standard(prog: &ConeProgram) -> Standard {
    let n = prog.n;
    let m: usize = prog
        .blocks
        .iter()
        .map(|blk| match blk {
            ConeBlock::Nonneg { a, .. } => a.nrows(),
            ConeBlock::Soc { au, .. } => au.nrows() + 1,
        })
        .sum();
    let mut a = RMat::zeros(m, n);
    let mut b = RVec::zeros(m);
    let mut cones = Vec::with_capacity(prog.blocks.len());
    let mut row = 0;
    for blk in &prog.blocks {
        match blk {
            ConeBlock::Nonneg { a: ab, b: bb } => {
                let d = ab.nrows();
                a.view_mut((row, 0), (d, n)).copy_from(&(-ab));
                b.rows_mut(row, d).copy_from(bb);
                cones.push(Cone::Nonneg(d));
                row += d;
            }
            ConeBlock::Soc { au, bu, a_s, b_s } => {
                let d = au.nrows() + 1;
                a.row_mut(row).copy_from(&(-a_s.transpose()));
                b[row] = *b_s;
                a.view_mut((row + 1, 0), (d - 1, n)).copy_from(&(-au));
                b.rows_mut(row + 1, d - 1).copy_from(bu);
                cones.push(Cone::Soc(d));
                row += d;
            }
        }
    }
    let mut std = Standard {
        a,
        b,
        c: prog.c.clone(),
        cones,
        col_scale: RVec::from_element(n, 1.0),
    };
    equilibrate(&mut std);
    std
}

/// Ruiz-style equilibration: columns are scaled individually, rows uniformly
/// within each cone block (a positive block scaling preserves the cone).
fn equilibrate(std: &mut Standard) {
    let (m, n) = std.a.shape();
    if m == 0 || n == 0 {
        return;
    }
    for _ in 0..8 {
        for j in 0..n {
            let norm = std.a.column(j).amax();
            if norm > 0.0 {
                let s = 1.0 / norm.sqrt();
                std.a.column_mut(j).scale_mut(s);
                std.col_scale[j] *= s;
            }
        }
        let mut row = 0;
        for cone in &std.cones {
            let d = cone.dim();
            let mut norm = std.a.view((row, 0), (d, n)).amax();
            norm = norm.max(std.b.rows(row, d).amax());
            if norm > 0.0 {
                let s = 1.0 / norm.sqrt();
                std.a.view_mut((row, 0), (d, n)).scale_mut(s);
                std.b.rows_mut(row, d).scale_mut(s);
            }
            row += d;
        }
    }
    for j in 0..n {
        std.c[j] *= std.col_scale[j];
    }
}

/// Per-cone Nesterov-Todd scaling data.
enum Scaling {
    Nonneg { w: RVec },
    Soc { eta: f64, wbar: RVec },
}

struct NtScaling {
    per_cone: Vec<Scaling>,
    /// lambda = W z = W^{-1} s, stored full length.
    lambda: RVec,
}

fn cone_degree(cones: &[Cone]) -> usize {
    cones
        .iter()
        .map(|c| match *c {
            Cone::Nonneg(d) => d,
            Cone::Soc(_) => 1,
        })
        .sum()
}

fn identity_element(cones: &[Cone], m: usize) -> RVec {
    let mut e = RVec::zeros(m);
    let mut row = 0;
    for c in cones {
        match *c {
            Cone::Nonneg(d) => {
                for i in 0..d {
                    e[row + i] = 1.0;
                }
                row += d;
            }
            Cone::Soc(d) => {
                e[row] = 1.0;
                row += d;
            }
        }
    }
    e
}

/// Margin to the cone boundary: min_i v_i for the orthant, v0 - ||v1|| for
/// each SOC; the overall margin is the minimum across cones.
fn min_margin(cones: &[Cone], v: &RVec) -> f64 {
    let mut margin = f64::INFINITY;
    let mut row = 0;
    for c in cones {
        match *c {
            Cone::Nonneg(d) => {
                for i in 0..d {
                    margin = margin.min(v[row + i]);
                }
                row += d;
            }
            Cone::Soc(d) => {
                let tail = v.rows(row + 1, d - 1).norm();
                margin = margin.min(v[row] - tail);
                row += d;
            }
        }
    }
    margin
}

fn nt_scaling(cones: &[Cone], s: &RVec, z: &RVec) -> NtScaling {
    let mut per_cone = Vec::with_capacity(cones.len());
    let mut lambda = RVec::zeros(s.len());
    let mut row = 0;
    for c in cones {
        match *c {
            Cone::Nonneg(d) => {
                let mut w = RVec::zeros(d);
                for i in 0..d {
                    w[i] = (s[row + i] / z[row + i]).sqrt();
                    lambda[row + i] = (s[row + i] * z[row + i]).sqrt();
                }
                per_cone.push(Scaling::Nonneg { w });
                row += d;
            }
            Cone::Soc(d) => {
                let sv = s.rows(row, d).into_owned();
                let zv = z.rows(row, d).into_owned();
                let sres = (sv[0] * sv[0] - sv.rows(1, d - 1).norm_squared()).max(f64::MIN_POSITIVE);
                let zres = (zv[0] * zv[0] - zv.rows(1, d - 1).norm_squared()).max(f64::MIN_POSITIVE);
                let snorm = sres.sqrt();
                let znorm = zres.sqrt();
                let sbar = &sv / snorm;
                let zbar = &zv / znorm;
                let gamma = ((1.0 + sbar.dot(&zbar)) / 2.0).max(f64::MIN_POSITIVE).sqrt();
                // wbar = (sbar + J zbar) / (2 gamma), unit hyperbolic
                let mut wbar = RVec::zeros(d);
                wbar[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
                for i in 1..d {
                    wbar[i] = (sbar[i] - zbar[i]) / (2.0 * gamma);
                }
                let eta = (snorm / znorm).sqrt();
                // lambda = W z, computed via the structured product
                let lv = apply_soc_w(eta, &wbar, &zv, false);
                lambda.rows_mut(row, d).copy_from(&lv);
                per_cone.push(Scaling::Soc { eta, wbar });
                row += d;
            }
        }
    }
    NtScaling { per_cone, lambda }
}

/// W v (or W^{-1} v when `inverse`) for one SOC, where
/// W = eta [w0, w1'; w1, I + w1 w1'/(1+w0)].
fn apply_soc_w(eta: f64, wbar: &RVec, v: &RVec, inverse: bool) -> RVec {
    let d = v.len();
    let w0 = wbar[0];
    let w1 = wbar.rows(1, d - 1);
    let v0 = v[0];
    let v1 = v.rows(1, d - 1);
    let sign = if inverse { -1.0 } else { 1.0 };
    let scale = if inverse { 1.0 / eta } else { eta };
    let t = w1.dot(&v1);
    let mut out = RVec::zeros(d);
    out[0] = scale * (w0 * v0 + sign * t);
    let coeff = sign * v0 + t / (1.0 + w0);
    for i in 0..d - 1 {
        out[i + 1] = scale * (v1[i] + w1[i] * coeff);
    }
    out
}

fn apply_w(cones: &[Cone], sc: &NtScaling, v: &RVec, inverse: bool) -> RVec {
    let mut out = RVec::zeros(v.len());
    let mut row = 0;
    for (c, s) in cones.iter().zip(&sc.per_cone) {
        match (c, s) {
            (Cone::Nonneg(d), Scaling::Nonneg { w }) => {
                for i in 0..*d {
                    out[row + i] = if inverse {
                        v[row + i] / w[i]
                    } else {
                        v[row + i] * w[i]
                    };
                }
                row += d;
            }
            (Cone::Soc(d), Scaling::Soc { eta, wbar }) => {
                let vv = v.rows(row, *d).into_owned();
                out.rows_mut(row, *d)
                    .copy_from(&apply_soc_w(*eta, wbar, &vv, inverse));
                row += d;
            }
            _ => unreachable!("cone/scaling mismatch"),
        }
    }
    out
}

/// Jordan product a o b.
fn jordan_prod(cones: &[Cone], a: &RVec, b: &RVec) -> RVec {
    let mut out = RVec::zeros(a.len());
    let mut row = 0;
    for c in cones {
        match *c {
            Cone::Nonneg(d) => {
                for i in 0..d {
                    out[row + i] = a[row + i] * b[row + i];
                }
                row += d;
            }
            Cone::Soc(d) => {
                let av = a.rows(row, d);
                let bv = b.rows(row, d);
                out[row] = av.dot(&bv);
                for i in 1..d {
                    out[row + i] = av[0] * bv[i] + bv[0] * av[i];
                }
                row += d;
            }
        }
    }
    out
}

/// Solves lambda o u = v for u.
fn jordan_div_lambda(cones: &[Cone], sc: &NtScaling, v: &RVec) -> RVec {
    let lambda = &sc.lambda;
    let mut out = RVec::zeros(v.len());
    let mut row = 0;
    for c in cones {
        match *c {
            Cone::Nonneg(d) => {
                for i in 0..d {
                    out[row + i] = v[row + i] / lambda[row + i];
                }
                row += d;
            }
            Cone::Soc(d) => {
                let l0 = lambda[row];
                let l1 = lambda.rows(row + 1, d - 1);
                let v0 = v[row];
                let v1 = v.rows(row + 1, d - 1);
                let det = l0 * l0 - l1.norm_squared();
                let u0 = (l0 * v0 - l1.dot(&v1)) / det;
                out[row] = u0;
                for i in 0..d - 1 {
                    out[row + 1 + i] = (v1[i] - u0 * l1[i]) / l0;
                }
                row += d;
            }
        }
    }
    out
}

/// Largest alpha with u + alpha du still in the cone (inf if unconstrained).
fn step_to_boundary(cones: &[Cone], u: &RVec, du: &RVec) -> f64 {
    let mut alpha = f64::INFINITY;
    let mut row = 0;
    for c in cones {
        match *c {
            Cone::Nonneg(d) => {
                for i in 0..d {
                    if du[row + i] < 0.0 {
                        alpha = alpha.min(-u[row + i] / du[row + i]);
                    }
                }
                row += d;
            }
            Cone::Soc(d) => {
                let u0 = u[row];
                let u1 = u.rows(row + 1, d - 1);
                let d0 = du[row];
                let d1 = du.rows(row + 1, d - 1);
                let qa = d0 * d0 - d1.norm_squared();
                let qb = u0 * d0 - u1.dot(&d1);
                let qc = (u0 * u0 - u1.norm_squared()).max(0.0);
                // smallest positive root of qa t^2 + 2 qb t + qc = 0
                let root = if qa.abs() < 1e-300 {
                    if qb < 0.0 {
                        Some(-qc / (2.0 * qb))
                    } else {
                        None
                    }
                } else {
                    let disc = qb * qb - qa * qc;
                    if disc < 0.0 {
                        None
                    } else {
                        let sq = disc.sqrt();
                        let r1 = (-qb - sq) / qa;
                        let r2 = (-qb + sq) / qa;
                        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
                        if lo > 0.0 {
                            Some(lo)
                        } else if hi > 0.0 {
                            Some(hi)
                        } else {
                            None
                        }
                    }
                };
                if let Some(r) = root {
                    alpha = alpha.min(r);
                }
                if d0 < 0.0 {
                    alpha = alpha.min(-u0 / d0);
                }
                row += d;
            }
        }
    }
    alpha.max(0.0)
}

/// Normal-equations KKT solver for [0 A'; A -W^2] via At W^-2 A = chol.
struct KktSolver<'a> {
    std: &'a Standard,
    sc: &'a NtScaling,
    /// W^{-1} A, reused for both products.
    a_tilde: RMat,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> KktSolver<'a> {
    fn new(std: &'a Standard, sc: &'a NtScaling) -> Option<Self> {
        let n = std.a.ncols();
        let mut a_tilde = RMat::zeros(std.a.nrows(), n);
        for j in 0..n {
            let col = std.a.column(j).into_owned();
            a_tilde.column_mut(j).copy_from(&apply_w(&std.cones, sc, &col, true));
        }
        let gram = a_tilde.transpose() * &a_tilde;
        let base = 1.0 + gram.diagonal().amax();
        let mut reg = 1e-12 * base;
        for _ in 0..6 {
            let mut g = gram.clone();
            for i in 0..n {
                g[(i, i)] += reg;
            }
            if let Some(chol) = g.cholesky() {
                return Some(KktSolver {
                    std,
                    sc,
                    a_tilde,
                    chol,
                });
            }
            reg *= 100.0;
        }
        None
    }

    fn solve_once(&self, bx: &RVec, bz: &RVec) -> (RVec, RVec) {
        let w_bz = apply_w(&self.std.cones, self.sc, bz, true);
        let rhs = bx + self.a_tilde.transpose() * &w_bz;
        let u1 = self.chol.solve(&rhs);
        let resid = &self.a_tilde * &u1 - w_bz;
        let u2 = apply_w(&self.std.cones, self.sc, &resid, true);
        (u1, u2)
    }

    /// Solves [0 A'; A -W^2] (u1, u2) = (bx, bz) with one round of
    /// iterative refinement; the regularized Cholesky leaves a residual in
    /// the first block row that the refinement largely removes.
    fn solve(&self, bx: &RVec, bz: &RVec) -> (RVec, RVec) {
        let (u1, u2) = self.solve_once(bx, bz);
        let r1 = bx - self.std.a.transpose() * &u2;
        let w2u2 = apply_w(
            &self.std.cones,
            self.sc,
            &apply_w(&self.std.cones, self.sc, &u2, false),
            false,
        );
        let r2 = bz - &self.std.a * &u1 + w2u2;
        let (d1, d2) = self.solve_once(&r1, &r2);
        (u1 + d1, u2 + d2)
    }
}

pub fn solve(prog: &ConeProgram, tol: f64, max_iter: usize) -> ConicSolution {
    // route quadratic objectives through the epigraph rewrite
    if prog.q.iter().any(|&qi| qi > 0.0) {
        let epi = assemble(
            Objective {
                q: prog.q.clone(),
                c: prog.c.clone(),
            },
            prog.blocks.clone(),
            Vec::new(),
        )
        .expect("already-validated program");
        let sol = solve(&epi, tol, max_iter);
        let x = sol.x.rows(0, prog.n).into_owned();
        let objective = prog.objective(&x);
        let primal_residual = prog.residuals(&x).0;
        return ConicSolution {
            x,
            objective,
            primal_residual,
            ..sol
        };
    }

    let std = to_standard(prog);
    let (m, n) = std.a.shape();

    if m == 0 {
        // unconstrained linear objective
        let status = if std.c.amax() == 0.0 {
            SolveStatus::Optimal
        } else {
            SolveStatus::Unbounded
        };
        let x = RVec::zeros(prog.n);
        return ConicSolution {
            x,
            objective: 0.0,
            status,
            primal_residual: 0.0,
            dual_residual: 0.0,
            gap: 0.0,
            iterations: 0,
        };
    }

    let cones = &std.cones;
    let e = identity_element(cones, m);
    let nu = cone_degree(cones) as f64;
    let norm_b = 1.0 + std.b.norm();
    let norm_c = 1.0 + std.c.norm();

    // least-squares initialization, shifted into the cone interior
    let (mut x, mut s, mut z) = {
        let gram = std.a.transpose() * &std.a;
        let base = 1.0 + gram.diagonal().amax();
        let mut g = gram;
        for i in 0..n {
            g[(i, i)] += 1e-10 * base;
        }
        let chol = g.cholesky().expect("regularized Gram is PD");
        let x0 = chol.solve(&(std.a.transpose() * &std.b));
        let s_guess = &std.b - &std.a * &x0;
        let z_guess = -(&std.a * chol.solve(&std.c));
        let shift = |v: RVec| -> RVec {
            let margin = min_margin(cones, &v);
            if margin > 0.0 {
                v
            } else {
                v + &e * (1.0 - margin)
            }
        };
        (x0, shift(s_guess), shift(z_guess))
    };
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;

    let mut status = SolveStatus::MaxIterations;
    let mut iterations = max_iter;
    let mut final_gap = f64::INFINITY;
    let mut final_dres = f64::INFINITY;
    // Best iterate seen, by worst-of-three score; endgame iterations can
    // degrade numerically once mu reaches machine precision.
    let mut best_score = f64::INFINITY;
    let mut best_x = &x / tau;

    for iter in 0..max_iter {
        let hrx = std.a.transpose() * &z + &std.c * tau;
        let hry = &std.a * &x + &s - &std.b * tau;
        let hrt = kappa + std.c.dot(&x) + std.b.dot(&z);
        let mu = (s.dot(&z) + tau * kappa) / (nu + 1.0);

        let pcost = std.c.dot(&x) / tau;
        let dcost = -std.b.dot(&z) / tau;
        let pres = hry.norm() / tau / norm_b;
        let dres = hrx.norm() / tau / norm_c;
        let relgap = (pcost - dcost).abs() / pcost.abs().max(dcost.abs()).max(1.0);

        let score = pres.max(dres).max(relgap);
        if score.is_finite() && tau > 0.0 && score < best_score {
            best_score = score;
            best_x = &x / tau;
            final_gap = relgap;
            final_dres = dres;
        }
        if pres <= tol && dres <= tol && relgap <= tol {
            status = SolveStatus::Optimal;
            iterations = iter;
            break;
        }
        if !score.is_finite() || !mu.is_finite() || mu < 1e-14 * (nu + 1.0) {
            // Numerical breakdown or complementarity exhausted without the
            // residuals following suit: stop on the best iterate.
            iterations = iter;
            break;
        }
        // infeasibility certificates
        let bz = std.b.dot(&z);
        if bz < 0.0 {
            let cert = (std.a.transpose() * &z).norm() * norm_b / (-bz * norm_c);
            if cert <= tol {
                status = SolveStatus::PrimalInfeasible;
                iterations = iter;
                final_dres = cert;
                break;
            }
        }
        let cx = std.c.dot(&x);
        if cx < 0.0 {
            let cert = (&std.a * &x + &s).norm() * norm_c / (-cx * norm_b);
            if cert <= tol {
                status = SolveStatus::Unbounded;
                iterations = iter;
                final_dres = cert;
                break;
            }
        }

        let sc = nt_scaling(cones, &s, &z);
        let Some(kkt) = KktSolver::new(&std, &sc) else {
            iterations = iter;
            break;
        };
        let (x1, z1) = kkt.solve(&(-&std.c), &std.b);
        let denom_base = std.c.dot(&x1) + std.b.dot(&z1) - kappa / tau;

        let direction = |bx: &RVec, bz_eff: &RVec, bt: f64, d_kt: f64| {
            let (x2, z2) = kkt.solve(bx, bz_eff);
            let num = bt - d_kt / tau - std.c.dot(&x2) - std.b.dot(&z2);
            let dtau = num / denom_base;
            let dx = &x2 + &x1 * dtau;
            let dz = &z2 + &z1 * dtau;
            let dkappa = (d_kt - kappa * dtau) / tau;
            (dx, dz, dtau, dkappa)
        };

        // predictor: pure Newton step toward the boundary
        let bz_aff = -&hry + &s;
        let (_dx_a, dz_a, dtau_a, dkappa_a) = direction(&(-&hrx), &bz_aff, -hrt, -tau * kappa);
        let ds_a = {
            let w2dz = apply_w(cones, &sc, &apply_w(cones, &sc, &dz_a, false), false);
            -&s - w2dz
        };
        let mut alpha_aff = step_to_boundary(cones, &s, &ds_a)
            .min(step_to_boundary(cones, &z, &dz_a));
        if dtau_a < 0.0 {
            alpha_aff = alpha_aff.min(-tau / dtau_a);
        }
        if dkappa_a < 0.0 {
            alpha_aff = alpha_aff.min(-kappa / dkappa_a);
        }
        let alpha_aff = alpha_aff.min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector with Mehrotra second-order term
        let w_inv_ds = apply_w(cones, &sc, &ds_a, true);
        let w_dz = apply_w(cones, &sc, &dz_a, false);
        let d_sigma = -jordan_prod(cones, &sc.lambda, &sc.lambda)
            - jordan_prod(cones, &w_inv_ds, &w_dz)
            + &e * (sigma * mu);
        let d_kt = -tau * kappa + sigma * mu - dtau_a * dkappa_a;
        let lam_div = jordan_div_lambda(cones, &sc, &d_sigma);
        let w_lam_div = apply_w(cones, &sc, &lam_div, false);
        let one_minus = 1.0 - sigma;
        let bz_eff = -&hry * one_minus - &w_lam_div;
        let (dx, dz, dtau, dkappa) = direction(
            &(-&hrx * one_minus),
            &bz_eff,
            -hrt * one_minus,
            d_kt,
        );
        let ds = {
            let w2dz = apply_w(cones, &sc, &apply_w(cones, &sc, &dz, false), false);
            &w_lam_div - w2dz
        };
        let mut alpha = step_to_boundary(cones, &s, &ds).min(step_to_boundary(cones, &z, &dz));
        if dtau < 0.0 {
            alpha = alpha.min(-tau / dtau);
        }
        if dkappa < 0.0 {
            alpha = alpha.min(-kappa / dkappa);
        }
        let alpha = (0.99 * alpha).min(1.0);
        if !alpha.is_finite() || alpha <= 0.0 {
            iterations = iter;
            break;
        }

        x += &dx * alpha;
        s += &ds * alpha;
        z += &dz * alpha;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
    }

    // recover the original-scale primal point from the best iterate
    let x_scaled = best_x;
    let mut x_out = RVec::zeros(prog.n);
    for j in 0..prog.n {
        x_out[j] = x_scaled[j] * std.col_scale[j];
    }
    if status == SolveStatus::PrimalInfeasible || status == SolveStatus::Unbounded {
        x_out.fill(0.0);
    }
    let objective = prog.objective(&x_out);
    let primal_residual = prog.residuals(&x_out).0;
    ConicSolution {
        x: x_out,
        objective,
        status,
        primal_residual,
        dual_residual: final_dres,
        gap: final_gap,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::program::{assemble, ConeBlock, Objective};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nonneg_row(a: &[f64], b: f64) -> ConeBlock {
        ConeBlock::Nonneg {
            a: RMat::from_row_slice(1, a.len(), a),
            b: RVec::from_element(1, b),
        }
    }

    #[test]
    fn norm_minimization_hits_analytic_optimum() {
        // min t s.t. ||(3,4)|| <= t
        let prog = assemble(
            Objective::linear(RVec::from_vec(vec![1.0])),
            vec![ConeBlock::Soc {
                au: RMat::zeros(2, 1),
                bu: RVec::from_vec(vec![3.0, 4.0]),
                a_s: RVec::from_vec(vec![1.0]),
                b_s: 0.0,
            }],
            vec![],
        )
        .unwrap();
        // note: assemble presolves only all-zero vector parts; this one has
        // constant nonzero entries so it stays a true SOC
        let sol = solve(&prog, 1e-7, 200);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 5.0).abs() < 1e-6, "obj {}", sol.objective);
        assert!(sol.primal_residual <= 1e-6);
    }

    #[test]
    fn quadratic_epigraph_example() {
        // min y^2 s.t. y >= 2
        let prog = assemble(
            Objective {
                q: RVec::from_vec(vec![1.0]),
                c: RVec::zeros(1),
            },
            vec![nonneg_row(&[1.0], -2.0)],
            vec![],
        )
        .unwrap();
        let sol = solve(&prog, 1e-7, 200);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 4.0).abs() < 1e-5, "obj {}", sol.objective);
        assert!((sol.x[0] - 2.0).abs() < 1e-5);
    }

    #[test]
    fn single_link_power_minimization() {
        // min rho^2 s.t. sqrt(gamma) ||(sqrt(C) rho, sigma)|| <= b rho
        // with b=2, C=0.1, sigma^2=1, gamma=3 -> rho*^2 = 3/3.7
        let (b, c_i, gamma) = (2.0, 0.1f64, 3.0f64);
        let g = gamma.sqrt();
        let prog = assemble(
            Objective {
                q: RVec::from_vec(vec![1.0]),
                c: RVec::zeros(1),
            },
            vec![ConeBlock::Soc {
                au: RMat::from_row_slice(2, 1, &[g * c_i.sqrt(), 0.0]),
                bu: RVec::from_vec(vec![0.0, g]),
                a_s: RVec::from_vec(vec![b]),
                b_s: 0.0,
            }],
            vec![],
        )
        .unwrap();
        let sol = solve(&prog, 1e-7, 200);
        assert_eq!(sol.status, SolveStatus::Optimal);
        let expect = 3.0 / 3.7;
        assert!(
            (sol.objective - expect).abs() < 1e-6 * expect.max(1.0),
            "obj {} expect {}",
            sol.objective,
            expect
        );
    }

    #[test]
    fn lp_corner() {
        // min x + y s.t. x >= 1, y >= 2
        let prog = assemble(
            Objective::linear(RVec::from_vec(vec![1.0, 1.0])),
            vec![nonneg_row(&[1.0, 0.0], -1.0), nonneg_row(&[0.0, 1.0], -2.0)],
            vec![],
        )
        .unwrap();
        let sol = solve(&prog, 1e-7, 200);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-6);
    }

    #[test]
    fn unconstrained_linear_is_unbounded() {
        let prog = assemble(
            Objective::linear(RVec::from_vec(vec![1.0])),
            vec![],
            vec![],
        )
        .unwrap();
        assert_eq!(solve(&prog, 1e-7, 200).status, SolveStatus::Unbounded);
    }

    #[test]
    fn constrained_unbounded_detected() {
        // min -y s.t. y >= 0
        let prog = assemble(
            Objective::linear(RVec::from_vec(vec![-1.0])),
            vec![nonneg_row(&[1.0], 0.0)],
            vec![],
        )
        .unwrap();
        assert_eq!(solve(&prog, 1e-7, 200).status, SolveStatus::Unbounded);
    }

    #[test]
    fn infeasible_detected() {
        // y >= 2 and y <= 1
        let prog = assemble(
            Objective::linear(RVec::from_vec(vec![1.0])),
            vec![nonneg_row(&[1.0], -2.0), nonneg_row(&[-1.0], 1.0)],
            vec![],
        )
        .unwrap();
        assert_eq!(solve(&prog, 1e-7, 200).status, SolveStatus::PrimalInfeasible);
    }

    fn random_feasible_program(rng: &mut ChaCha8Rng, n: usize) -> (ConeProgram, RVec) {
        // pick a point, then build constraints that hold at it with slack
        let y0 = RVec::from_fn(n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        let mut blocks = Vec::new();
        for _ in 0..3 {
            let a = RMat::from_fn(2, n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let slack = RVec::from_fn(2, |_, _| rng.gen::<f64>() + 0.1);
            let b = &slack - &a * &y0;
            blocks.push(ConeBlock::Nonneg { a, b });
        }
        for _ in 0..2 {
            let d = 3;
            let au = RMat::from_fn(d, n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let bu = RVec::from_fn(d, |_, _| rng.gen::<f64>() - 0.5);
            let a_s = RVec::from_fn(n, |_, _| rng.gen::<f64>() - 0.5);
            let u0 = &au * &y0 + &bu;
            let b_s = u0.norm() + rng.gen::<f64>() + 0.1 - a_s.dot(&y0);
            blocks.push(ConeBlock::Soc { au, bu, a_s, b_s });
        }
        // bound the feasible set so the problem stays bounded
        for j in 0..n {
            let mut lo = vec![0.0; n];
            lo[j] = 1.0;
            blocks.push(nonneg_row(&lo, 10.0 - y0[j]));
            let mut hi = vec![0.0; n];
            hi[j] = -1.0;
            blocks.push(nonneg_row(&hi, 10.0 + y0[j]));
        }
        let c = RVec::from_fn(n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        (assemble(Objective::linear(c), blocks, vec![]).unwrap(), y0)
    }

    #[test]
    fn weak_duality_on_random_programs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..25 {
            let (prog, y0) = random_feasible_program(&mut rng, 4);
            let sol = solve(&prog, 1e-7, 200);
            assert_eq!(sol.status, SolveStatus::Optimal);
            let feasible_obj = prog.objective(&y0);
            assert!(
                sol.objective <= feasible_obj + 1e-6 * (1.0 + feasible_obj.abs()),
                "solver {} worse than feasible point {}",
                sol.objective,
                feasible_obj
            );
            assert!(sol.primal_residual <= 1e-6, "viol {}", sol.primal_residual);
        }
    }

    #[test]
    fn scale_invariance_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (prog, _) = random_feasible_program(&mut rng, 3);
        let sol1 = solve(&prog, 1e-7, 200);
        let sol1b = solve(&prog, 1e-7, 200);
        assert_eq!(sol1.x, sol1b.x, "solver must be deterministic");
        let mut scaled = prog.clone();
        scaled.c *= 7.0;
        let sol7 = solve(&scaled, 1e-7, 200);
        assert_eq!(sol7.status, SolveStatus::Optimal);
        assert!((sol7.objective - 7.0 * sol1.objective).abs() < 1e-5 * (1.0 + sol1.objective.abs()));
        assert!((&sol7.x - &sol1.x).norm() < 1e-4 * (1.0 + sol1.x.norm()));
    }

    #[test]
    fn reported_objective_matches_reevaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let (prog, _) = random_feasible_program(&mut rng, 5);
            let sol = solve(&prog, 1e-7, 200);
            let re = prog.objective(&sol.x);
            assert!((sol.objective - re).abs() <= 1e-8 * (1.0 + re.abs()));
        }
    }

    #[test]
    fn badly_scaled_problem_still_solves() {
        // mimics SINR rows: tiny gains vs unit powers
        // min p s.t. 1e-6 * p >= 3e-6  ->  p >= 3
        let prog = assemble(
            Objective::linear(RVec::from_vec(vec![1.0])),
            vec![
                nonneg_row(&[1e-6], -3e-6),
                nonneg_row(&[-1.0], 1e3),
            ],
            vec![],
        )
        .unwrap();
        let sol = solve(&prog, 1e-7, 200);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 3.0).abs() < 1e-5, "obj {}", sol.objective);
    }
}

