// SPDX-License-Identifier: Apache-2.0

//! Divided differences of the exponential.
//!
//! For nodes `y_0..y_n` the lower-bidiagonal Opitz matrix
//! `A = diag(y) + N` (ones on the subdiagonal) satisfies
//! `exp(A)[j][i] = exp[y_i..y_j]`. We evaluate `exp(A)` by scaling and
//! squaring: nodes are shifted so that `max y = 0`, halved `s` times until
//! `|y| / 2^s <= 1/2`, exponentiated by a Taylor series there, and squared
//! back up. After the shift every table entry is positive and the squaring
//! recurrence only adds positive products, so there is no cancellation and
//! repeated nodes need no special casing.
//!
//! Directional derivatives with respect to the nodes come from the block
//! matrix `[[A, V, 0], [0, A, V], [0, 0, A]]`, `V = diag(v)`: its upper
//! blocks hold `D_v exp[y]` and `½ D_v² exp[y]`.

/// Lower-triangular table, `T(i, j)` for `i <= j` stored at `[j * n + i]`.
#[derive(Debug, Clone)]
pub(crate) struct Table {
    n: usize,
    data: Vec<f64>,
}

impl Table {
    fn zeros(n: usize) -> Self {
        Table {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[j * self.n + i]
    }
}

/// Divided differences over every contiguous run of the shifted nodes,
/// plus optional directional derivatives.
///
/// All values omit the common factor `e^{log_scale}`.
#[derive(Debug, Clone)]
pub(crate) struct ExpDividedDifferences {
    pub log_scale: f64,
    value: Table,
    first: Option<Table>,
    second: Option<Table>,
}

impl ExpDividedDifferences {
    /// `exp[y_i..y_j] / e^{log_scale}`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.value.at(i, j)
    }

    /// `D_v exp[y_0..y_n] / e^{log_scale}`.
    pub fn first_full(&self) -> f64 {
        let n = self.value.n;
        self.first.as_ref().expect("first derivative requested").at(0, n - 1)
    }

    /// `½ D_v² exp[y_0..y_n] / e^{log_scale}`.
    pub fn half_second_full(&self) -> f64 {
        let n = self.value.n;
        self.second.as_ref().expect("second derivative requested").at(0, n - 1)
    }

    pub fn value_full(&self) -> f64 {
        self.value(0, self.value.n - 1)
    }
}

/// Divided differences of `exp` over `nodes`.
pub(crate) fn exp_divided_differences(nodes: &[f64]) -> ExpDividedDifferences {
    compute(nodes, None, 0)
}

/// Divided differences together with first (`order >= 1`) and halved second
/// (`order == 2`) derivatives along `direction`.
pub(crate) fn exp_divided_differences_along(
    nodes: &[f64],
    direction: &[f64],
    order: usize,
) -> ExpDividedDifferences {
    assert_eq!(nodes.len(), direction.len());
    compute(nodes, Some(direction), order)
}

/// Full-run divided difference `exp[y_0..y_n]` as a plain number.
pub(crate) fn exp_divided_difference_full(nodes: &[f64]) -> f64 {
    let dd = exp_divided_differences(nodes);
    dd.log_scale.exp() * dd.value_full()
}

fn compute(nodes: &[f64], direction: Option<&[f64]>, order: usize) -> ExpDividedDifferences {
    let n = nodes.len();
    assert!(n >= 1, "at least one node is required");
    let order = if direction.is_some() { order.min(2) } else { 0 };

    let top = nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let radius = nodes.iter().map(|y| top - y).fold(0.0, f64::max);
    let squarings = if radius <= 0.5 {
        0
    } else {
        (radius / 0.5).log2().ceil() as i32
    };
    let scale = 0.5f64.powi(squarings);
    let w: Vec<f64> = nodes.iter().map(|y| (y - top) * scale).collect();
    let v: Vec<f64> = direction
        .map(|d| d.iter().map(|x| x * scale).collect())
        .unwrap_or_else(|| vec![0.0; n]);

    let (mut e, mut f, mut h) = taylor_base(&w, &v, order);
    for _ in 0..squarings {
        let (e2, f2, h2) = square(&e, &f, &h, order);
        e = e2;
        f = f2;
        h = h2;
    }
    ExpDividedDifferences {
        log_scale: top,
        value: e,
        first: (order >= 1).then_some(f),
        second: (order >= 2).then_some(h),
    }
}

/// Taylor series of the block Opitz matrix for small nodes.
fn taylor_base(w: &[f64], v: &[f64], order: usize) -> (Table, Table, Table) {
    let n = w.len();
    let mut sum_e = Table::zeros(n);
    let mut sum_f = Table::zeros(n);
    let mut sum_h = Table::zeros(n);
    let mut x = Table::zeros(n);
    let mut y = Table::zeros(n);
    let mut z = Table::zeros(n);
    for i in 0..n {
        *x.at_mut(i, i) = 1.0;
        *sum_e.at_mut(i, i) = 1.0;
    }

    let mut nx = Table::zeros(n);
    let mut ny = Table::zeros(n);
    let mut nz = Table::zeros(n);
    // Smallest entry of the result is about e^{-1/2} / (n-1)!.
    let floor = (1..n).fold(0.5, |acc, k| acc / k as f64) * 1e-18;
    let mut k = 1usize;
    loop {
        let inv_k = 1.0 / k as f64;
        let mut largest = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                // (T A)[j][i] = T[j][i] w_i + T[j][i+1]
                let shift = |t: &Table| {
                    let mut acc = t.at(i, j) * w[i];
                    if i < j {
                        acc += t.at(i + 1, j);
                    }
                    acc
                };
                let ex = shift(&x) * inv_k;
                *nx.at_mut(i, j) = ex;
                largest = largest.max(ex.abs());
                if order >= 1 {
                    let fy = (x.at(i, j) * v[i] + shift(&y)) * inv_k;
                    *ny.at_mut(i, j) = fy;
                    largest = largest.max(fy.abs());
                }
                if order >= 2 {
                    let hz = (y.at(i, j) * v[i] + shift(&z)) * inv_k;
                    *nz.at_mut(i, j) = hz;
                    largest = largest.max(hz.abs());
                }
            }
        }
        std::mem::swap(&mut x, &mut nx);
        std::mem::swap(&mut y, &mut ny);
        std::mem::swap(&mut z, &mut nz);
        for idx in 0..n * n {
            sum_e.data[idx] += x.data[idx];
            sum_f.data[idx] += y.data[idx];
            sum_h.data[idx] += z.data[idx];
        }
        if (k > n + order && largest < floor) || k > 400 {
            break;
        }
        k += 1;
    }
    (sum_e, sum_f, sum_h)
}

/// One doubling step: tables for nodes `w` become tables for nodes `2w`.
fn square(e: &Table, f: &Table, h: &Table, order: usize) -> (Table, Table, Table) {
    let n = e.n;
    let mut e2 = Table::zeros(n);
    let mut f2 = Table::zeros(n);
    let mut h2 = Table::zeros(n);
    for j in 0..n {
        for i in 0..=j {
            let mut se = 0.0;
            let mut sf = 0.0;
            let mut sh = 0.0;
            for k in i..=j {
                let (ejk, eki) = (e.at(k, j), e.at(i, k));
                se += ejk * eki;
                if order >= 1 {
                    let (fjk, fki) = (f.at(k, j), f.at(i, k));
                    sf += ejk * fki + fjk * eki;
                    if order >= 2 {
                        sh += ejk * h.at(i, k) + fjk * fki + h.at(k, j) * eki;
                    }
                }
            }
            let factor = 0.5f64.powi((j - i) as i32);
            *e2.at_mut(i, j) = se * factor;
            *f2.at_mut(i, j) = sf * factor;
            *h2.at_mut(i, j) = sh * factor;
        }
    }
    (e2, f2, h2)
}
