use thiserror::Error;

use crate::linalg::{RMat, RVec};

#[derive(Debug, Error, PartialEq)]
pub enum ConicError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("quadratic coefficient {index} is negative ({value})")]
    NegativeQuadratic { index: usize, value: f64 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One conic constraint block over the decision vector y.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeBlock {
    /// Every row of `a` y + `b` must be nonnegative.
    Nonneg { a: RMat, b: RVec },
    /// || au y + bu || <= as y + bs.
    Soc { au: RMat, bu: RVec, a_s: RVec, b_s: f64 },
}

impl ConeBlock {
    pub fn n_vars(&self) -> usize {
        match self {
            ConeBlock::Nonneg { a, .. } => a.ncols(),
            ConeBlock::Soc { au, .. } => au.ncols(),
        }
    }

    /// Violation of the block at `y` (0 when satisfied).
    pub fn violation(&self, y: &RVec) -> f64 {
        match self {
            ConeBlock::Nonneg { a, b } => {
                let v = a * y + b;
                v.iter().fold(0.0f64, |acc, &x| acc.max(-x))
            }
            ConeBlock::Soc { au, bu, a_s, b_s } => {
                let u = au * y + bu;
                let s = a_s.dot(y) + b_s;
                (u.norm() - s).max(0.0)
            }
        }
    }
}

/// min y' diag(q) y + c' y subject to the cone blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeProgram {
    pub n: usize,
    /// Variables the caller created; assemble may append an epigraph helper.
    pub n_user: usize,
    pub q: RVec,
    pub c: RVec,
    pub blocks: Vec<ConeBlock>,
    pub names: Vec<String>,
}

impl ConeProgram {
    /// Objective value at `y`.
    pub fn objective(&self, y: &RVec) -> f64 {
        let quad: f64 = (0..self.n).map(|i| self.q[i] * y[i] * y[i]).sum();
        quad + self.c.dot(y)
    }

    /// Worst violation across all blocks plus the objective at `y`.
    pub fn residuals(&self, y: &RVec) -> (f64, f64) {
        let viol = self
            .blocks
            .iter()
            .fold(0.0f64, |acc, blk| acc.max(blk.violation(y)));
        (viol, self.objective(y))
    }
}

/// Objective data handed to [`assemble`].
#[derive(Debug, Clone)]
pub struct Objective {
    pub q: RVec,
    pub c: RVec,
}

impl Objective {
    pub fn linear(c: RVec) -> Self {
        let n = c.len();
        Objective {
            q: RVec::zeros(n),
            c,
        }
    }
}

/// Validates dimensions, reduces SOC blocks whose vector part is identically
/// zero to linear rows, and rewrites a nonzero quadratic objective into an
/// epigraph SOC block (t >= y' diag(q) y via ||(2 sqrt(q_i) y_i, 1 - t)|| <=
/// 1 + t) so the solver only ever sees a linear objective.
pub fn assemble(
    objective: Objective,
    blocks: Vec<ConeBlock>,
    names: Vec<String>,
) -> Result<ConeProgram, ConicError> {
    let n = objective.c.len();
    if objective.q.len() != n {
        return Err(ConicError::Dimension(format!(
            "objective has {} linear but {} quadratic coefficients",
            n,
            objective.q.len()
        )));
    }
    if !names.is_empty() && names.len() != n {
        return Err(ConicError::Dimension(format!(
            "{} names for {} variables",
            names.len(),
            n
        )));
    }
    for (i, &qi) in objective.q.iter().enumerate() {
        if qi < 0.0 {
            return Err(ConicError::NegativeQuadratic { index: i, value: qi });
        }
    }
    for (bi, blk) in blocks.iter().enumerate() {
        if blk.n_vars() != n {
            return Err(ConicError::Dimension(format!(
                "block {} has {} columns, expected {}",
                bi,
                blk.n_vars(),
                n
            )));
        }
        match blk {
            ConeBlock::Nonneg { a, b } => {
                if a.nrows() != b.len() {
                    return Err(ConicError::Dimension(format!(
                        "block {}: {} rows vs {} offsets",
                        bi,
                        a.nrows(),
                        b.len()
                    )));
                }
            }
            ConeBlock::Soc { au, bu, a_s, .. } => {
                if au.nrows() != bu.len() || a_s.len() != n {
                    return Err(ConicError::Dimension(format!(
                        "block {}: inconsistent SOC dimensions",
                        bi
                    )));
                }
            }
        }
    }

    let has_quad = objective.q.iter().any(|&qi| qi > 0.0);
    let n_total = if has_quad { n + 1 } else { n };

    let widen = |m: &RMat| -> RMat {
        if n_total == m.ncols() {
            m.clone()
        } else {
            let mut out = RMat::zeros(m.nrows(), n_total);
            out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
            out
        }
    };
    let widen_v = |v: &RVec| -> RVec {
        let mut out = RVec::zeros(n_total);
        out.rows_mut(0, v.len()).copy_from(v);
        out
    };

    let mut out_blocks = Vec::with_capacity(blocks.len() + 1);
    for blk in &blocks {
        match blk {
            ConeBlock::Nonneg { a, b } => out_blocks.push(ConeBlock::Nonneg {
                a: widen(a),
                b: b.clone(),
            }),
            ConeBlock::Soc { au, bu, a_s, b_s } => {
                let degenerate = au.iter().all(|&x| x == 0.0) && bu.iter().all(|&x| x == 0.0);
                if degenerate {
                    // ||0|| <= a_s y + b_s is just a linear row
                    out_blocks.push(ConeBlock::Nonneg {
                        a: RMat::from_rows(&[widen_v(a_s).transpose()]),
                        b: RVec::from_element(1, *b_s),
                    });
                } else {
                    out_blocks.push(ConeBlock::Soc {
                        au: widen(au),
                        bu: bu.clone(),
                        a_s: widen_v(a_s),
                        b_s: *b_s,
                    });
                }
            }
        }
    }

    let mut names = names;
    let (q_out, c_out) = if has_quad {
        let active: Vec<usize> = (0..n).filter(|&i| objective.q[i] > 0.0).collect();
        let d = active.len() + 1;
        let mut au = RMat::zeros(d, n_total);
        let bu = {
            let mut v = RVec::zeros(d);
            for (row, &i) in active.iter().enumerate() {
                au[(row, i)] = 2.0 * objective.q[i].sqrt();
            }
            // last row encodes 1 - t
            au[(d - 1, n)] = -1.0;
            v[d - 1] = 1.0;
            v
        };
        let mut a_s = RVec::zeros(n_total);
        a_s[n] = 1.0;
        out_blocks.push(ConeBlock::Soc {
            au,
            bu,
            a_s,
            b_s: 1.0,
        });
        let mut c = widen_v(&objective.c);
        c[n] = 1.0;
        if !names.is_empty() {
            names.push("__quad_epi".to_string());
        }
        (RVec::zeros(n_total), c)
    } else {
        (objective.q, objective.c)
    };

    Ok(ConeProgram {
        n: n_total,
        n_user: n,
        q: q_out,
        c: c_out,
        blocks: out_blocks,
        names,
    })
}

/// Serializes a program to the plain-text `cone_v1` format.
///
/// Grammar (whitespace separated, one statement per line):
/// ```text
/// cone_v1
/// vars <n>
/// min <c_0> ... <c_{n-1}>
/// quad <q_0> ... <q_{n-1}>          # optional, omitted when all zero
/// nonneg <rows>                      # then <rows> lines: a_0 .. a_{n-1} b
/// soc <d>                            # then d lines of "u" rows (a.. b)
///                                    # then 1 line of the scalar row (a.. b)
/// ```
pub fn dump_cone(prog: &ConeProgram) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "cone_v1");
    let _ = writeln!(s, "vars {}", prog.n);
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(s, "min {}", join(prog.c.as_slice()));
    if prog.q.iter().any(|&x| x != 0.0) {
        let _ = writeln!(s, "quad {}", join(prog.q.as_slice()));
    }
    for blk in &prog.blocks {
        match blk {
            ConeBlock::Nonneg { a, b } => {
                let _ = writeln!(s, "nonneg {}", a.nrows());
                for r in 0..a.nrows() {
                    let row: Vec<f64> = a.row(r).iter().copied().collect();
                    let _ = writeln!(s, "{} {:?}", join(&row), b[r]);
                }
            }
            ConeBlock::Soc { au, bu, a_s, b_s } => {
                let _ = writeln!(s, "soc {}", au.nrows());
                for r in 0..au.nrows() {
                    let row: Vec<f64> = au.row(r).iter().copied().collect();
                    let _ = writeln!(s, "{} {:?}", join(&row), bu[r]);
                }
                let row: Vec<f64> = a_s.iter().copied().collect();
                let _ = writeln!(s, "{} {:?}", join(&row), b_s);
            }
        }
    }
    s
}

/// Parses the `cone_v1` format produced by [`dump_cone`].
pub fn parse_cone(text: &str) -> Result<ConeProgram, ConicError> {
    let err = |line: usize, message: &str| ConicError::Parse {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines().enumerate();
    let (ln, header) = lines.next().ok_or_else(|| err(0, "empty input"))?;
    if header.trim() != "cone_v1" {
        return Err(err(ln + 1, "expected cone_v1 header"));
    }

    let parse_floats = |ln: usize, s: &str| -> Result<Vec<f64>, ConicError> {
        s.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err(ln + 1, "bad number")))
            .collect()
    };
    let parse_row = |ln: usize, s: &str, n: usize| -> Result<(Vec<f64>, f64), ConicError> {
        let vals = parse_floats(ln, s)?;
        if vals.len() != n + 1 {
            return Err(err(ln + 1, "wrong row width"));
        }
        let (a, b) = vals.split_at(n);
        Ok((a.to_vec(), b[0]))
    };

    let mut n = None;
    let mut c = None;
    let mut q: Option<RVec> = None;
    let mut blocks = Vec::new();
    while let Some((ln, raw)) = lines.next() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match kw {
            "vars" => {
                n = Some(
                    rest.trim()
                        .parse::<usize>()
                        .map_err(|_| err(ln + 1, "bad vars count"))?,
                );
            }
            "min" => {
                let vals = parse_floats(ln, rest)?;
                if Some(vals.len()) != n {
                    return Err(err(ln + 1, "objective width mismatch"));
                }
                c = Some(RVec::from_vec(vals));
            }
            "quad" => {
                let vals = parse_floats(ln, rest)?;
                if Some(vals.len()) != n {
                    return Err(err(ln + 1, "quad width mismatch"));
                }
                q = Some(RVec::from_vec(vals));
            }
            "nonneg" | "soc" => {
                let n = n.ok_or_else(|| err(ln + 1, "vars must come first"))?;
                let rows: usize = rest
                    .trim()
                    .parse()
                    .map_err(|_| err(ln + 1, "bad row count"))?;
                let take = if kw == "soc" { rows + 1 } else { rows };
                let mut a = RMat::zeros(take, n);
                let mut b = RVec::zeros(take);
                for r in 0..take {
                    let (lr, row) = lines
                        .next()
                        .ok_or_else(|| err(ln + 1, "unexpected end of block"))?;
                    let (av, bv) = parse_row(lr, row, n)?;
                    for (j, &x) in av.iter().enumerate() {
                        a[(r, j)] = x;
                    }
                    b[r] = bv;
                }
                if kw == "nonneg" {
                    blocks.push(ConeBlock::Nonneg { a, b });
                } else {
                    blocks.push(ConeBlock::Soc {
                        au: a.rows(0, rows).into_owned(),
                        bu: b.rows(0, rows).into_owned(),
                        a_s: a.row(rows).transpose(),
                        b_s: b[rows],
                    });
                }
            }
            _ => return Err(err(ln + 1, "unknown keyword")),
        }
    }
    let n = n.ok_or_else(|| err(0, "missing vars"))?;
    let c = c.ok_or_else(|| err(0, "missing objective"))?;
    Ok(ConeProgram {
        n,
        n_user: n,
        q: q.unwrap_or_else(|| RVec::zeros(n)),
        c,
        blocks,
        names: Vec::new(),
    })
}
