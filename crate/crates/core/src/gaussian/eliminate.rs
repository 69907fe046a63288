use super::{GaussianConditional, JacobianFactor, VectorValues};
use crate::error::{Error, Result};
use crate::key::Key;
use crate::scalar::Scalar;
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

/// Collects column dimensions of every key in `factors`, checking consistency.
fn collect_dims<T: Scalar>(factors: &[&JacobianFactor<T>]) -> Result<BTreeMap<Key, usize>> {
    let mut dims = BTreeMap::new();
    for f in factors {
        for (k, d) in f.dims() {
            if let Some(prev) = dims.insert(k, d) {
                if prev != d {
                    return Err(Error::DimensionMismatch(format!("variable {k} used with dimensions {prev} and {d}")));
                }
            }
        }
    }
    Ok(dims)
}

/// Eliminates `var` from the product of `factors`.
///
/// The stacked system `[A | b]` (columns: `var` first, then the remaining
/// keys in id order) is triangularized by Householder QR so that
/// `exp(−½‖Ax − b‖²) = exp(−½‖R x_j + S C − d‖²) · exp(−½‖A_τ C − b_τ‖²)`.
/// Returns the conditional on `var` and the separator factor `(A_τ, b_τ)`,
/// whose rows include the constant residual left over when the system is
/// overdetermined.
pub fn eliminate_one<T: Scalar>(
    factors: &[&JacobianFactor<T>],
    var: Key,
) -> Result<(GaussianConditional<T>, JacobianFactor<T>)> {
    let dims = collect_dims(factors)?;
    let n_var = *dims.get(&var).ok_or_else(|| Error::InvalidStructure(format!("no factor involves {var}")))?;
    let separator: Vec<(Key, usize)> = dims.iter().filter(|(k, _)| **k != var).map(|(k, d)| (*k, *d)).collect();

    let mut offsets = BTreeMap::new();
    offsets.insert(var, 0);
    let mut col = n_var;
    for (k, d) in &separator {
        offsets.insert(*k, col);
        col += d;
    }
    let n_cols = col;
    let n_rows: usize = factors.iter().map(|f| f.rows()).sum();
    if n_rows < n_var {
        return Err(Error::Underconstrained(var));
    }

    let mut ab = DMatrix::<T>::zeros(n_rows, n_cols + 1);
    let mut row = 0;
    for f in factors {
        let m = f.rows();
        for (k, a) in f.blocks() {
            let c = offsets[&k];
            ab.view_mut((row, c), (m, a.ncols())).copy_from(a);
        }
        ab.view_mut((row, n_cols), (m, 1)).copy_from(f.rhs());
        row += m;
    }

    let mut r = ab.qr().r();
    let kept_rows = r.nrows();

    let frontal_block = r.view((0, 0), (n_var, n_var));
    let scale = frontal_block.amax();
    for i in 0..n_var {
        if !(r[(i, i)].abs() > T::rank_tolerance() * scale) {
            return Err(Error::Underconstrained(var));
        }
    }
    for i in 0..n_var {
        if r[(i, i)] < T::zero() {
            r.row_mut(i).neg_mut();
        }
    }
    for j in 0..n_var {
        for i in (j + 1)..n_var {
            r[(i, j)] = T::zero();
        }
    }

    let r_block = r.view((0, 0), (n_var, n_var)).into_owned();
    let parents = separator.iter().map(|(k, d)| (*k, r.view((0, offsets[k]), (n_var, *d)).into_owned())).collect();
    let d = DVector::from_iterator(n_var, r.view((0, n_cols), (n_var, 1)).iter().copied());
    let conditional = GaussianConditional::new(var, r_block, parents, d)?;

    let sep_rows = kept_rows - n_var;
    let blocks =
        separator.iter().map(|(k, dk)| (*k, r.view((n_var, offsets[k]), (sep_rows, *dk)).into_owned())).collect();
    let rhs = DVector::from_iterator(sep_rows, r.view((n_var, n_cols), (sep_rows, 1)).iter().copied());
    let marginal = JacobianFactor::new(blocks, rhs)?;
    Ok((conditional, marginal))
}

/// Solves conditionals given in elimination order (parents eliminated later)
/// by back-substitution, last conditional first.
pub fn back_substitute<T: Scalar>(conditionals: &[GaussianConditional<T>]) -> Result<VectorValues<T>> {
    let mut values = VectorValues::new();
    for c in conditionals.iter().rev() {
        let x = c.solve(&values)?;
        values.insert(c.frontal(), x);
    }
    Ok(values)
}

/// Purely continuous linear factor graph.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaussianFactorGraph<T: Scalar> {
    factors: Vec<JacobianFactor<T>>,
}

impl<T: Scalar> GaussianFactorGraph<T> {
    pub fn new() -> Self {
        GaussianFactorGraph { factors: Vec::new() }
    }

    pub fn push(&mut self, factor: JacobianFactor<T>) {
        self.factors.push(factor);
    }

    pub fn factors(&self) -> &[JacobianFactor<T>] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dims(&self) -> Result<BTreeMap<Key, usize>> {
        collect_dims(&self.factors.iter().collect::<Vec<_>>())
    }

    /// `Σ ½‖A_i x − b_i‖²`.
    pub fn error(&self, values: &VectorValues<T>) -> Result<T> {
        self.factors.iter().try_fold(T::zero(), |acc, f| Ok(acc + f.error(values)?))
    }

    /// Dense `(A, b)` with columns laid out in `ordering`.
    pub fn dense(&self, ordering: &[Key]) -> Result<(DMatrix<T>, DVector<T>)> {
        let dims = self.dims()?;
        let mut offsets = BTreeMap::new();
        let mut col = 0;
        for k in ordering {
            let d = *dims.get(k).ok_or_else(|| Error::InvalidOrdering(format!("{k} is not in the graph")))?;
            offsets.insert(*k, col);
            col += d;
        }
        if offsets.len() != dims.len() {
            return Err(Error::InvalidOrdering("ordering does not cover every variable".into()));
        }
        let rows: usize = self.factors.iter().map(|f| f.rows()).sum();
        let mut a = DMatrix::zeros(rows, col);
        let mut b = DVector::zeros(rows);
        let mut row = 0;
        for f in &self.factors {
            for (k, blk) in f.blocks() {
                a.view_mut((row, offsets[&k]), (f.rows(), blk.ncols())).copy_from(blk);
            }
            b.rows_mut(row, f.rows()).copy_from(f.rhs());
            row += f.rows();
        }
        Ok((a, b))
    }

    /// Sequential elimination in `ordering`.
    pub fn eliminate_sequential(&self, ordering: &[Key]) -> Result<GaussianBayesNet<T>> {
        let mut pool: Vec<JacobianFactor<T>> = self.factors.clone();
        let mut conditionals = Vec::with_capacity(ordering.len());
        for &var in ordering {
            let (involved, rest): (Vec<_>, Vec<_>) = pool.into_iter().partition(|f| f.has_key(var));
            pool = rest;
            if involved.is_empty() {
                return Err(Error::InvalidOrdering(format!("no factor involves {var}")));
            }
            let refs: Vec<&JacobianFactor<T>> = involved.iter().collect();
            let (c, sep) = eliminate_one(&refs, var)?;
            conditionals.push(c);
            if !sep.keys().is_empty() {
                pool.push(sep);
            }
        }
        if let Some(f) = pool.iter().find(|f| !f.keys().is_empty()) {
            return Err(Error::InvalidOrdering(format!("ordering misses {:?}", f.keys())));
        }
        Ok(GaussianBayesNet { conditionals })
    }

    pub fn optimize(&self, ordering: &[Key]) -> Result<VectorValues<T>> {
        self.eliminate_sequential(ordering)?.optimize()
    }
}

impl<T: Scalar> FromIterator<JacobianFactor<T>> for GaussianFactorGraph<T> {
    fn from_iter<I: IntoIterator<Item = JacobianFactor<T>>>(iter: I) -> Self {
        GaussianFactorGraph { factors: iter.into_iter().collect() }
    }
}

/// Conditionals in elimination order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaussianBayesNet<T: Scalar> {
    conditionals: Vec<GaussianConditional<T>>,
}

impl<T: Scalar> GaussianBayesNet<T> {
    pub fn new(conditionals: Vec<GaussianConditional<T>>) -> Self {
        GaussianBayesNet { conditionals }
    }

    pub fn conditionals(&self) -> &[GaussianConditional<T>] {
        &self.conditionals
    }

    pub fn optimize(&self) -> Result<VectorValues<T>> {
        back_substitute(&self.conditionals)
    }

    pub fn log_density(&self, values: &VectorValues<T>) -> Result<T> {
        self.conditionals.iter().try_fold(T::zero(), |acc, c| Ok(acc + c.log_density(values)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn v(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    fn unary(key: u64, a: f64, b: f64) -> JacobianFactor<f64> {
        JacobianFactor::new(vec![(Key(key), s(a))], v(b)).unwrap()
    }

    #[test]
    fn single_factor() {
        let f = unary(0, 1.0, 5.0);
        let (c, m) = eliminate_one(&[&f], Key(0)).unwrap();
        assert_eq!(c.r()[(0, 0)], 1.0);
        assert_eq!(c.solve(&VectorValues::new()).unwrap()[0], 5.0);
        assert_eq!(m.rows(), 0);
    }

    #[test]
    fn two_measurements_average() {
        let f1 = unary(0, 1.0, 0.0);
        let f2 = unary(0, 1.0, 2.0);
        let (c, m) = eliminate_one(&[&f1, &f2], Key(0)).unwrap();
        assert!((c.r()[(0, 0)] - 2f64.sqrt()).abs() < 1e-14);
        assert!((c.solve(&VectorValues::new()).unwrap()[0] - 1.0).abs() < 1e-14);
        // the separator keeps the residual: (0−1)² + (2−1)² = 2, half of it remains as ‖b_τ‖²/2 = 1
        assert!((m.rhs().norm_squared() - 2.0).abs() < 1e-14);
        assert!((m.error(&VectorValues::new()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn underconstrained_variable() {
        let f = JacobianFactor::new(vec![(Key(0), DMatrix::from_row_slice(1, 2, &[1.0, 0.0]))], v(1.0)).unwrap();
        assert_eq!(eliminate_one(&[&f], Key(0)).unwrap_err(), Error::Underconstrained(Key(0)));
        let zero = unary(0, 0.0, 1.0);
        assert_eq!(eliminate_one(&[&zero], Key(0)).unwrap_err(), Error::Underconstrained(Key(0)));
    }

    #[test]
    fn chain_marginal_matches_schur_complement() {
        // prior on x0, odometry x1 - x0 = 1, measurement on x1
        let prior = JacobianFactor::new(vec![(Key(0), s(2.0))], v(0.4)).unwrap();
        let odo = JacobianFactor::new(vec![(Key(0), s(-1.5)), (Key(1), s(1.5))], v(1.5)).unwrap();
        let (c, marginal) = eliminate_one(&[&prior, &odo], Key(0)).unwrap();
        assert_eq!(c.parents(), &[Key(1)]);
        // dense information of the joint, Schur complement onto x1
        let g: GaussianFactorGraph<f64> = [prior.clone(), odo.clone()].into_iter().collect();
        let (a, b) = g.dense(&[Key(0), Key(1)]).unwrap();
        let info = a.transpose() * &a;
        let eta = a.transpose() * &b;
        let schur = info[(1, 1)] - info[(1, 0)] * info[(0, 1)] / info[(0, 0)];
        let eta_m = eta[1] - info[(1, 0)] * eta[0] / info[(0, 0)];
        let blk = marginal.block(Key(1)).unwrap();
        let m_info = (blk.transpose() * blk)[(0, 0)];
        let m_eta = (blk.transpose() * marginal.rhs())[0];
        assert!((m_info - schur).abs() < 1e-10);
        assert!((m_eta - eta_m).abs() < 1e-10);
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: u64) -> GaussianFactorGraph<f64> {
        let mut g = GaussianFactorGraph::new();
        for i in 0..n {
            g.push(unary(i, rng.random_range(0.5..2.0), rng.random_range(-2.0..2.0)));
        }
        for _ in 0..(2 * n) {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j {
                continue;
            }
            g.push(
                JacobianFactor::new(
                    vec![(Key(i), s(rng.random_range(-2.0..2.0))), (Key(j), s(rng.random_range(-2.0..2.0)))],
                    v(rng.random_range(-2.0..2.0)),
                )
                .unwrap(),
            );
        }
        g
    }

    #[test]
    fn back_substitution_matches_dense_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let g = random_graph(&mut rng, 5);
            let ordering: Vec<Key> = (0..5).map(Key).collect();
            let x = g.optimize(&ordering).unwrap();
            let (a, b) = g.dense(&ordering).unwrap();
            let normal = (a.transpose() * &a).cholesky().unwrap().solve(&(a.transpose() * &b));
            for i in 0..5 {
                assert!((x.at(Key(i)).unwrap()[0] - normal[i as usize]).abs() < 1e-10);
            }
            // gradient of the total quadratic vanishes
            let xs = DVector::from_iterator(5, (0..5).map(|i| x.at(Key(i)).unwrap()[0]));
            let grad = a.transpose() * (&a * xs - &b);
            assert!(grad.amax() <= 1e-8);
        }
    }

    #[test]
    fn elimination_is_exact_up_to_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let g = random_graph(&mut rng, 6);
            let ordering: Vec<Key> = (0..6).rev().map(Key).collect();
            let bn = g.eliminate_sequential(&ordering).unwrap();
            let mut offset = None;
            for _ in 0..100 {
                let x: VectorValues<f64> = (0..6).map(|i| (Key(i), v(rng.random_range(-3.0..3.0)))).collect();
                let lhs = -g.error(&x).unwrap();
                let rhs = bn.log_density(&x).unwrap();
                let diff = lhs - rhs;
                match offset {
                    None => offset = Some(diff),
                    Some(o) => assert!((diff - o).abs() <= 1e-9 * lhs.abs().max(1.0)),
                }
            }
        }
    }

    #[test]
    fn graph_error_cases() {
        let g = GaussianFactorGraph::<f64>::new();
        assert_eq!(g.error(&VectorValues::new()).unwrap(), 0.0);
        let g: GaussianFactorGraph<f64> = [unary(0, 1.0, 1.0)].into_iter().collect();
        let x: VectorValues<f64> = [(Key(0), v(1.0))].into_iter().collect();
        assert_eq!(g.error(&x).unwrap(), 0.0);
        let g: GaussianFactorGraph<f64> = [unary(0, 1.0, 0.0)].into_iter().collect();
        let x: VectorValues<f64> = [(Key(0), v(2.0))].into_iter().collect();
        assert_eq!(g.error(&x).unwrap(), 2.0);
        assert!(matches!(g.error(&VectorValues::new()), Err(Error::IncompleteValues(_))));
    }

    #[test]
    fn single_precision_elimination() {
        let f1 =
            JacobianFactor::<f32>::new(vec![(Key(0), DMatrix::from_element(1, 1, 1.0))], DVector::from_element(1, 0.0))
                .unwrap();
        let f2 =
            JacobianFactor::<f32>::new(vec![(Key(0), DMatrix::from_element(1, 1, 1.0))], DVector::from_element(1, 2.0))
                .unwrap();
        let (c, _) = eliminate_one(&[&f1, &f2], Key(0)).unwrap();
        assert!((c.solve(&VectorValues::new()).unwrap()[0] - 1.0).abs() < 1e-6);
    }
}
