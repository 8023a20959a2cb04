//! Exact refinement of ADMM iterates, working from the Gram matrix.
//!
//! With a support `S` and signs `s` fixed, the optimum solves
//! `A_S^T A_S c_S = A_S^T x - s / lambda`. A guess is accepted only when the
//! resulting point satisfies the full optimality conditions, so anything
//! returned here is the exact minimizer.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::certificate::SUPPORT_EPS_REL;

/// Normal-equation view of one column problem.
pub(crate) struct NormalEquations<'a> {
    gram: &'a DMatrix<f64>,
    /// `A^T x`, zero at the masked entry.
    ax: DVector<f64>,
    excluded: Option<usize>,
    nrows: usize,
    lambda: f64,
}

impl<'a> NormalEquations<'a> {
    pub(crate) fn new(
        gram: &'a DMatrix<f64>,
        mut ax: DVector<f64>,
        excluded: Option<usize>,
        nrows: usize,
        lambda: f64,
    ) -> Self {
        if let Some(i) = excluded {
            ax[i] = 0.0;
        }
        Self {
            gram,
            ax,
            excluded,
            nrows,
            lambda,
        }
    }

    fn cols(&self) -> usize {
        self.ax.len()
    }

    fn is_active(&self, j: usize) -> bool {
        self.excluded != Some(j)
    }

    /// `A^T nu` with `nu = lambda (x - A c)`, where `c` is zero off `support`.
    fn correlations(&self, c: &DVector<f64>, support: &[usize]) -> DVector<f64> {
        let mut out = self.ax.clone();
        for &j in support {
            out.axpy(-c[j], &self.gram.column(j), 1.0);
        }
        out *= self.lambda;
        if let Some(i) = self.excluded {
            out[i] = 0.0;
        }
        out
    }

    fn sub_gram(&self, support: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(support.len(), support.len(), |r, k| {
            self.gram[(support[r], support[k])]
        })
    }

    /// Minimizer of the smooth problem with the signs on `support` frozen.
    fn fixed_sign_minimizer(&self, support: &[usize], signs: &[f64]) -> Option<DVector<f64>> {
        if support.len() > self.nrows {
            return None;
        }
        let rhs = DVector::from_fn(support.len(), |r, _| {
            self.ax[support[r]] - signs[r] / self.lambda
        });
        let coef = Cholesky::new(self.sub_gram(support))?.solve(&rhs);
        coef.iter().all(|v| v.is_finite()).then_some(coef)
    }

    /// Accepts `(support, signs)` only if it yields an optimum.
    pub(crate) fn polish(
        &self,
        support: &[usize],
        signs: &[f64],
        tol: f64,
    ) -> Option<DVector<f64>> {
        let cols = self.cols();
        let mut c = DVector::zeros(cols);
        if support.is_empty() {
            return (self.ax.amax() * self.lambda <= 1.0).then_some(c);
        }
        let coef = self.fixed_sign_minimizer(support, signs)?;
        if coef.iter().zip(signs).any(|(v, s)| v * s <= 0.0) {
            return None;
        }
        for (&j, &v) in support.iter().zip(coef.iter()) {
            c[j] = v;
        }
        let corr = self.correlations(&c, support);
        let mut in_support = vec![false; cols];
        support.iter().for_each(|&j| in_support[j] = true);
        let feasible = (0..cols)
            .filter(|&j| self.is_active(j) && !in_support[j])
            .all(|j| corr[j].abs() <= 1.0 + tol);
        let consistent = support
            .iter()
            .zip(signs)
            .all(|(&j, s)| (corr[j] - s).abs() <= tol);
        (feasible && consistent).then_some(c)
    }

    /// Tries supports read off the iterate: its exact nonzeros, then
    /// thresholds at growing relative levels, each capped at the `n` largest
    /// magnitudes. With `thorough`, falls back to [`Self::descend`] started
    /// from the iterate.
    pub(crate) fn certify(
        &self,
        c: &DVector<f64>,
        tol: f64,
        thorough: bool,
    ) -> Option<DVector<f64>> {
        let mut order: Vec<usize> = (0..c.len())
            .filter(|&j| self.is_active(j) && c[j] != 0.0)
            .collect();
        order.sort_by(|&a, &b| c[b].abs().total_cmp(&c[a].abs()).then(a.cmp(&b)));
        let scale = c.amax().max(1.0);
        let mut tried: Option<usize> = None;
        for rel in [0.0, SUPPORT_EPS_REL, 1e-4, 1e-2] {
            let keep = order
                .iter()
                .take_while(|&&j| c[j].abs() > rel * scale)
                .count()
                .min(self.nrows);
            if tried == Some(keep) {
                continue;
            }
            tried = Some(keep);
            let mut support: Vec<usize> = order[..keep].to_vec();
            support.sort_unstable();
            let signs: Vec<f64> = support.iter().map(|&j| c[j].signum()).collect();
            if let Some(p) = self.polish(&support, &signs, tol) {
                return Some(p);
            }
        }
        if thorough {
            return self.descend(c.clone(), tol);
        }
        None
    }

    /// Feature-sign style active-set descent.
    ///
    /// Each step solves the fixed-sign problem on the current support, then
    /// moves towards it, stopping at the best sign change on the way. A zero
    /// coefficient whose correlation exceeds one enters the support. The
    /// objective decreases strictly, so the loop ends at the exact optimum
    /// unless a support turns out rank deficient.
    /// Feature-sign style active-set descent.
    ///
    /// Each step solves the fixed-sign problem on the current support, then
    /// moves towards it, stopping at the best sign change on the way. A zero
    /// coefficient whose correlation exceeds one enters the support; if it
    /// lies in the span of the support, a pivot along the null direction
    /// swaps it in instead. The objective decreases at every step, and the
    /// end point is re-polished from scratch before it is returned.
    pub(crate) fn descend(&self, mut c: DVector<f64>, tol: f64) -> Option<DVector<f64>> {
        let cols = self.cols();
        if let Some(i) = self.excluded {
            c[i] = 0.0;
        }
        // keep the largest coefficients whose columns are independent
        let mut order: Vec<usize> = (0..cols).filter(|&j| c[j] != 0.0).collect();
        order.sort_by(|&a, &b| c[b].abs().total_cmp(&c[a].abs()).then(a.cmp(&b)));
        let mut support: Vec<usize> = Vec::new();
        let mut factor: Option<Cholesky<f64, Dyn>> = None;
        for j in order {
            match self.append(factor.as_ref(), &support, j) {
                Appended::Grown(f) => {
                    factor = Some(f);
                    support.push(j);
                }
                Appended::InSpan(_) => c[j] = 0.0,
            }
        }

        let max_steps = 20 * (cols + 10);
        for _ in 0..max_steps {
            let corr = self.correlations(&c, &support);
            let settled = support
                .iter()
                .all(|&j| (corr[j] - c[j].signum()).abs() <= tol);
            let mut signs: Vec<f64> = support.iter().map(|&j| c[j].signum()).collect();
            if settled {
                let best = (0..cols)
                    .filter(|&j| self.is_active(j) && c[j] == 0.0)
                    .max_by(|&a, &b| corr[a].abs().total_cmp(&corr[b].abs()).then(b.cmp(&a)));
                let j = match best {
                    Some(j) if corr[j].abs() > 1.0 + tol => j,
                    _ => {
                        let mut sorted = support.clone();
                        sorted.sort_unstable();
                        let s: Vec<f64> = sorted.iter().map(|&j| c[j].signum()).collect();
                        return self.polish(&sorted, &s, tol);
                    }
                };
                let sign = corr[j].signum();
                match self.append(factor.as_ref(), &support, j) {
                    Appended::Grown(f) => {
                        factor = Some(f);
                        support.push(j);
                        signs.push(sign);
                    }
                    Appended::InSpan(w) => {
                        let leaving = self.pivot(&mut c, &support, &w, j, sign)?;
                        let pos = support.iter().position(|&k| k == leaving)?;
                        let f = factor.take()?.remove_column(pos);
                        support.remove(pos);
                        factor = match self.append(Some(&f), &support, j) {
                            Appended::Grown(g) => Some(g),
                            Appended::InSpan(_) => return None,
                        };
                        support.push(j);
                        continue;
                    }
                }
            }

            let f = factor.as_ref()?;
            let rhs = DVector::from_fn(support.len(), |r, _| {
                self.ax[support[r]] - signs[r] / self.lambda
            });
            let target = f.solve(&rhs);
            if !target.iter().all(|v| v.is_finite()) {
                return None;
            }
            let current = DVector::from_fn(support.len(), |r, _| c[support[r]]);
            let delta = &target - &current;
            let g = self.sub_gram(&support);
            // objective along the segment, up to a constant:
            // sum |cur + t delta| + (lambda/2) (t^2 delta^T G delta - 2 t delta^T A_S^T r0)
            let at_r0 = DVector::from_fn(support.len(), |r, _| self.ax[support[r]]) - &g * &current;
            let lin = delta.dot(&at_r0);
            let quad = delta.dot(&(&g * &delta));
            let value = |t: f64, zeroed: Option<usize>| {
                let l1: f64 = (0..support.len())
                    .filter(|&k| zeroed != Some(k))
                    .map(|k| (current[k] + t * delta[k]).abs())
                    .sum();
                l1 + 0.5 * self.lambda * (t * t * quad - 2.0 * t * lin)
            };

            let mut best = (1.0, None, value(1.0, None));
            for k in 0..support.len() {
                if current[k] == 0.0 {
                    continue;
                }
                let t = current[k] / (current[k] - target[k]);
                if t > 0.0 && t < 1.0 {
                    let v = value(t, Some(k));
                    if v < best.2 {
                        best = (t, Some(k), v);
                    }
                }
            }
            if !(best.2 < value(0.0, None)) {
                return None;
            }
            let (t, zeroed, _) = best;
            let mut leaving = Vec::new();
            for (k, &j) in support.iter().enumerate() {
                let v = current[k] + t * delta[k];
                let crossed = t < 1.0 && current[k] != 0.0 && current[k] * v <= 0.0;
                if zeroed == Some(k) || crossed || v == 0.0 {
                    c[j] = 0.0;
                    leaving.push(k);
                } else {
                    c[j] = v;
                }
            }
            for &k in leaving.iter().rev() {
                support.remove(k);
                factor = factor
                    .filter(|_| !support.is_empty())
                    .map(|f| f.remove_column(k));
            }
        }
        None
    }

    /// Extends the factor of `G_SS` by column `j`, or reports the
    /// coefficients `w` with `a_j = A_S w` when `a_j` is in the span.
    fn append(&self, factor: Option<&Cholesky<f64, Dyn>>, support: &[usize], j: usize) -> Appended {
        let gjj = self.gram[(j, j)];
        let Some(f) = factor else {
            return match Cholesky::new(DMatrix::from_element(1, 1, gjj)) {
                Some(f) if gjj > 0.0 => Appended::Grown(f),
                _ => Appended::InSpan(DVector::zeros(0)),
            };
        };
        let col = DVector::from_fn(support.len(), |r, _| self.gram[(support[r], j)]);
        let w = f.solve(&col);
        let off_span = gjj - col.dot(&w);
        if support.len() >= self.nrows || off_span <= SPAN_TOL * gjj {
            return Appended::InSpan(w);
        }
        Appended::Grown(f.insert_column(support.len(), col.push(gjj)))
    }

    /// Degenerate step for an entering column `a_j = A_S w`. Moving along the
    /// null direction of `[A_S a_j]` keeps the residual fixed while the l1
    /// norm drops at rate `|a_j^T nu| - 1`, so the walk continues until a
    /// coefficient hits zero. Returns that coefficient's index.
    fn pivot(
        &self,
        c: &mut DVector<f64>,
        support: &[usize],
        w: &DVector<f64>,
        j: usize,
        sign: f64,
    ) -> Option<usize> {
        // c_j = sign * t, c_S -= sign * t * w
        let mut t = f64::INFINITY;
        let mut leaving = None;
        for (r, &k) in support.iter().enumerate() {
            let rate = -sign * w[r];
            if c[k] * rate < 0.0 {
                let hit = -c[k] / rate;
                if hit < t {
                    t = hit;
                    leaving = Some(k);
                }
            }
        }
        let leaving = leaving?;
        for (r, &k) in support.iter().enumerate() {
            c[k] -= sign * t * w[r];
        }
        c[leaving] = 0.0;
        c[j] = sign * t;
        Some(leaving)
    }
}

/// Relative residual below which an entering column counts as lying in the
/// span of the support.
const SPAN_TOL: f64 = 1e-9;

enum Appended {
    Grown(Cholesky<f64, Dyn>),
    InSpan(DVector<f64>),
}
