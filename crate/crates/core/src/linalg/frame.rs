//! Unitaries that carry one orthonormal frame onto another, stored as a
//! product of Householder reflections.

use super::{re, CMat, CVec, C64};

/// A unitary `V` with `V a_k = b_k` for given orthonormal columns `a_k`,
/// `b_k`, acting on the rest of the space in a fixed but unspecified way.
/// Applying it costs `O(k d)` per vector, so it is much cheaper than a dense
/// `d x d` matrix when few columns are prescribed.
#[derive(Clone, Debug)]
pub struct FrameMap {
    dim: usize,
    reflectors: Vec<CVec>,
    targets: CMat,
    phases: Vec<C64>,
}

impl FrameMap {
    /// Both matrices are `d x k` with orthonormal columns.
    pub fn new(from: &CMat, to: &CMat) -> FrameMap {
        assert_eq!(from.shape(), to.shape());
        let dim = from.nrows();
        let mut map = FrameMap {
            dim,
            reflectors: Vec::with_capacity(from.ncols()),
            targets: to.clone(),
            phases: Vec::with_capacity(from.ncols()),
        };
        for k in 0..from.ncols() {
            let mut u: CVec = from.column(k).into_owned();
            for v in &map.reflectors {
                reflect(v, &mut u);
            }
            let b = to.column(k);
            let c = b.dotc(&u);
            let phi = if c.norm() > 1e-300 {
                c / re(c.norm())
            } else {
                re(1.0)
            };
            // Reflect u onto -phi b; the sign choice keeps v well away from 0.
            let v = &u + b * phi;
            let norm = v.norm();
            map.reflectors.push(v / re(norm));
            map.phases.push(-phi.conj());
        }
        map
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `x <- V x`
    pub fn apply(&self, x: &mut CVec) {
        for v in &self.reflectors {
            reflect(v, x);
        }
        for (k, &ph) in self.phases.iter().enumerate() {
            let b = self.targets.column(k);
            let coef = b.dotc(x) * (ph - re(1.0));
            x.axpy(coef, &b, re(1.0));
        }
    }

    /// `m <- m V^T`, i.e. `V` applied to each row of `m` viewed as a vector.
    pub fn apply_rows(&self, m: &mut CMat) {
        for v in &self.reflectors {
            // m G^T = m - 2 (m conj(v)) v^T
            let t = &*m * v.map(|z| z.conj());
            m.ger(re(-2.0), &t, v, re(1.0));
        }
        for (k, &ph) in self.phases.iter().enumerate() {
            let b = self.targets.column(k);
            let t = &*m * b.map(|z| z.conj());
            m.ger(ph - re(1.0), &t, &b.into_owned(), re(1.0));
        }
    }

    pub fn to_matrix(&self) -> CMat {
        let mut out = CMat::identity(self.dim, self.dim);
        // Rows of the identity transformed by V^T give V^T; transpose back.
        self.apply_rows(&mut out);
        out.transpose()
    }
}

fn reflect(v: &CVec, x: &mut CVec) {
    let coef = v.dotc(x) * re(-2.0);
    x.axpy(coef, v, re(1.0));
}
