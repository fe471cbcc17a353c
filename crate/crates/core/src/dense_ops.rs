//! Dense multi-subsystem operators, channels and replica permutations.
//!
//! Layout: the first entry of `dims` is the most significant tensor factor.
//! Single-copy operators are site-major (`dims = [2; L]`). Operators on `m`
//! copies of an `L`-qubit system are copy-major: subsystem `c * L + s` is
//! site `s` of copy `c`. [`site_to_copy_major`] converts from the site-major
//! layout `s * m + c`, which is what a tensor product of per-site 4-copy
//! factors naturally produces.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{cap, Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Default absolute tolerance for exact algebra.
pub const TOL: f64 = 1e-12;
/// Largest matrix side handled densely (two copies at L=6, four at L=3).
pub const DENSE_DIM_CAP: usize = 4096;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl DenseOperator {
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, expected square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let prod: usize = dims.iter().product();
        if prod != matrix.nrows() || dims.iter().any(|&d| d == 0) {
            return Err(Error::DimensionMismatch(format!(
                "dims {:?} do not multiply to {}",
                dims,
                matrix.nrows()
            )));
        }
        Ok(Self { matrix, dims })
    }

    /// Operator on `n` qubits (or a single block when `n` is not a power of two).
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        let dims = if d.is_power_of_two() && d > 1 {
            vec![2; d.trailing_zeros() as usize]
        } else {
            vec![d]
        };
        Self::new(matrix, dims)
    }

    pub fn from_rows(rows: &[&[C64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_matrix(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dims: &[usize]) -> Self {
        let d = dims.iter().product();
        Self {
            matrix: CMatrix::identity(d, d),
            dims: dims.to_vec(),
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let d = dims.iter().product();
        Self {
            matrix: CMatrix::zeros(d, d),
            dims: dims.to_vec(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(self.matrix, dims)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {} by {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
            dims: self.dims.clone(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("cannot add".into()));
        }
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
            dims: self.dims.clone(),
        })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            matrix: &self.matrix * c,
            dims: self.dims.clone(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Tr(A† A).
    pub fn norm_sq(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Max-entry distance.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Distance to `other` modulo a global phase.
    pub fn phase_insensitive_diff(&self, other: &Self) -> f64 {
        let ip: C64 = other
            .matrix
            .iter()
            .zip(self.matrix.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        if ip.norm() < 1e-300 {
            return self.max_abs_diff(other);
        }
        let ph = ip / ip.norm();
        self.max_abs_diff(&other.scale(ph))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.matrix.adjoint() * &self.matrix;
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| (p[(i, j)] - if i == j { ONE } else { ZERO }).norm() < tol))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm() < tol))
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
            dims,
        }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        partial_trace(self, keep)
    }

    /// Reorders tensor factors: new subsystem `i` is old subsystem `order[i]`.
    pub fn permute_subsystems(&self, order: &[usize]) -> Result<Self> {
        let map = subsystem_index_map(&self.dims, order)?;
        let d = self.dim();
        let m = CMatrix::from_fn(d, d, |r, c| self.matrix[(map[r], map[c])]);
        let dims = order.iter().map(|&o| self.dims[o]).collect();
        Ok(Self { matrix: m, dims })
    }

    /// Text fixture format, see [`DenseOperator::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::from("dims");
        for d in &self.dims {
            s.push_str(&format!(" {d}"));
        }
        s.push('\n');
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.matrix[(i, j)];
                    format!("{:?},{:?}", z.re, z.im)
                })
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses one matrix: a `dims d1 d2 ...` line followed by one line per row
    /// of whitespace-separated `re,im` entries. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut ops = parse_operators(text)?;
        if ops.len() != 1 {
            return Err(Error::Parse(format!("expected one matrix, found {}", ops.len())));
        }
        Ok(ops.pop().unwrap())
    }
}

/// Parses a sequence of matrices in the text fixture format.
pub fn parse_operators(text: &str) -> Result<Vec<DenseOperator>> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap().trim())
        .filter(|l| !l.is_empty());
    let mut out = Vec::new();
    while let Some(header) = lines.next() {
        let mut it = header.split_whitespace();
        if it.next() != Some("dims") {
            return Err(Error::Parse(format!("expected 'dims', got '{header}'")));
        }
        let dims: Vec<usize> = it
            .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(format!("bad dim '{t}': {e}"))))
            .collect::<Result<_>>()?;
        let d: usize = dims.iter().product();
        let mut data = Vec::with_capacity(d * d);
        for r in 0..d {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {r}")))?;
            let row: Vec<C64> = line.split_whitespace().map(parse_complex).collect::<Result<_>>()?;
            if row.len() != d {
                return Err(Error::Parse(format!("row {r} has {} entries, expected {d}", row.len())));
            }
            data.extend(row);
        }
        out.push(DenseOperator::new(CMatrix::from_row_slice(d, d, &data), dims)?);
    }
    Ok(out)
}

fn parse_complex(tok: &str) -> Result<C64> {
    let (re, im) = tok
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("entry '{tok}' is not re,im")))?;
    let p = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("bad number '{s}': {e}")));
    Ok(C64::new(p(re)?, p(im)?))
}

/// For each flat index of the reordered space, the flat index in the original.
fn subsystem_index_map(dims: &[usize], order: &[usize]) -> Result<Vec<usize>> {
    let n = dims.len();
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::InvalidArgument(format!("order {order:?} has wrong length")));
    }
    for &o in order {
        if o >= n || seen[o] {
            return Err(Error::InvalidArgument(format!("order {order:?} is not a permutation")));
        }
        seen[o] = true;
    }
    let mut old_stride = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        old_stride[i] = old_stride[i + 1] * dims[i + 1];
    }
    let new_dims: Vec<usize> = order.iter().map(|&o| dims[o]).collect();
    let total: usize = dims.iter().product();
    let mut map = vec![0usize; total];
    let mut digits = vec![0usize; n];
    for (idx, slot) in map.iter_mut().enumerate() {
        let mut rem = idx;
        for i in (0..n).rev() {
            digits[i] = rem % new_dims[i];
            rem /= new_dims[i];
        }
        *slot = (0..n).map(|i| digits[i] * old_stride[order[i]]).sum();
    }
    Ok(map)
}

pub fn kron(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    a.kron(b)
}

pub fn kron_all(ops: &[DenseOperator]) -> DenseOperator {
    let mut it = ops.iter();
    let first = it.next().expect("kron_all of empty list").clone();
    it.fold(first, |acc, o| acc.kron(o))
}

/// Traces out every subsystem not listed in `keep`; kept subsystems stay in
/// their original relative order.
pub fn partial_trace(o: &DenseOperator, keep: &[usize]) -> Result<DenseOperator> {
    let n = o.dims.len();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() || keep_sorted.iter().any(|&k| k >= n) {
        return Err(Error::InvalidArgument(format!("bad keep set {keep:?} for {n} subsystems")));
    }
    let traced: Vec<usize> = (0..n).filter(|i| !keep_sorted.contains(i)).collect();
    let mut order = keep_sorted.clone();
    order.extend(&traced);
    let p = o.permute_subsystems(&order)?;
    let dk: usize = keep_sorted.iter().map(|&i| o.dims[i]).product();
    let dt: usize = traced.iter().map(|&i| o.dims[i]).product();
    let m = CMatrix::from_fn(dk, dk, |r, c| (0..dt).map(|t| p.matrix[(r * dt + t, c * dt + t)]).sum());
    let dims = if keep_sorted.is_empty() {
        vec![1]
    } else {
        keep_sorted.iter().map(|&i| o.dims[i]).collect()
    };
    DenseOperator::new(m, dims)
}

/// Row index reached from column `col` under `T_sigma` on `m` copies of a
/// `d`-dimensional space: the factor in slot `a` moves to slot `sigma[a]`.
pub fn permuted_index(sigma: &[usize], d: usize, col: usize) -> usize {
    let m = sigma.len();
    let mut digits = [0usize; 16];
    let mut rem = col;
    for a in (0..m).rev() {
        digits[a] = rem % d;
        rem /= d;
    }
    let mut out = [0usize; 16];
    for a in 0..m {
        out[sigma[a]] = digits[a];
    }
    out[..m].iter().fold(0, |acc, &x| acc * d + x)
}

/// `T_sigma (v_1 ⊗ … ⊗ v_m) = v_{sigma⁻¹(1)} ⊗ … ⊗ v_{sigma⁻¹(m)}`, so
/// `T_sigma T_tau = T_{sigma∘tau}`. `sigma` is 0-based, `sigma[a]` = image of `a`.
pub fn permutation_operator(sigma: &[usize], d: usize, m: usize) -> Result<DenseOperator> {
    if sigma.len() != m || m > 16 {
        return Err(Error::InvalidArgument(format!("permutation {sigma:?} is not on {m} copies")));
    }
    let mut seen = vec![false; m];
    for &s in sigma {
        if s >= m || seen[s] {
            return Err(Error::InvalidArgument(format!("{sigma:?} is not a permutation")));
        }
        seen[s] = true;
    }
    let total = d.checked_pow(m as u32).unwrap_or(usize::MAX);
    cap("permutation operator dimension", total, DENSE_DIM_CAP)?;
    let mut mat = CMatrix::zeros(total, total);
    for col in 0..total {
        mat[(permuted_index(sigma, d, col), col)] = ONE;
    }
    DenseOperator::new(mat, vec![d; m])
}

/// Converts an operator on `n_sites` sites × `n_copies` copies from
/// site-major order (`s * n_copies + c`) to copy-major order (`c * n_sites + s`).
pub fn site_to_copy_major(op: &DenseOperator, n_sites: usize, n_copies: usize) -> Result<DenseOperator> {
    if op.dims.len() != n_sites * n_copies {
        return Err(Error::DimensionMismatch(format!(
            "{} subsystems, expected {}",
            op.dims.len(),
            n_sites * n_copies
        )));
    }
    let order: Vec<usize> = (0..n_copies)
        .flat_map(|c| (0..n_sites).map(move |s| s * n_copies + c))
        .collect();
    op.permute_subsystems(&order)
}

/// Inverse of [`site_to_copy_major`].
pub fn copy_to_site_major(op: &DenseOperator, n_sites: usize, n_copies: usize) -> Result<DenseOperator> {
    if op.dims.len() != n_sites * n_copies {
        return Err(Error::DimensionMismatch("wrong number of subsystems".into()));
    }
    let order: Vec<usize> = (0..n_sites)
        .flat_map(|s| (0..n_copies).map(move |c| c * n_sites + s))
        .collect();
    op.permute_subsystems(&order)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Picture {
    /// `O ↦ Σ K O K†`
    Schrodinger,
    /// `O ↦ Σ K† O K`
    Heisenberg,
}

#[derive(Clone, Debug)]
pub struct QuantumChannel {
    kraus: Vec<DenseOperator>,
    picture: Picture,
}

impl QuantumChannel {
    /// Validates `Σ K†K = I` for Schrödinger-picture sets and `Σ K K† = I`
    /// for Heisenberg-picture sets (the Heisenberg map is then unital).
    pub fn new(kraus: Vec<DenseOperator>, picture: Picture) -> Result<Self> {
        Self::with_tolerance(kraus, picture, TOL)
    }

    pub fn with_tolerance(kraus: Vec<DenseOperator>, picture: Picture, tol: f64) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
        let d = first.dim();
        if kraus.iter().any(|k| k.dim() != d) {
            return Err(Error::DimensionMismatch("Kraus operators differ in size".into()));
        }
        let mut sum = CMatrix::zeros(d, d);
        for k in &kraus {
            sum += match picture {
                Picture::Schrodinger => k.matrix.adjoint() * &k.matrix,
                Picture::Heisenberg => &k.matrix * k.matrix.adjoint(),
            };
        }
        let err = (sum - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err > tol {
            return Err(Error::InvalidArgument(format!("Kraus set is not trace preserving (error {err:.3e})")));
        }
        Ok(Self { kraus, picture })
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self {
            kraus: vec![DenseOperator::identity(dims)],
            picture: Picture::Schrodinger,
        }
    }

    pub fn unitary(u: DenseOperator) -> Result<Self> {
        if !u.is_unitary(1e-10) {
            return Err(Error::InvalidArgument("operator is not unitary".into()));
        }
        Ok(Self {
            kraus: vec![u],
            picture: Picture::Schrodinger,
        })
    }

    /// `O ↦ (1-p) O + p Tr(O) I/2` with Kraus set
    /// `{√(1-3p/4) I, √p/2 X, √p/2 Y, √p/2 Z}`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("p = {p} outside [0, 1]")));
        }
        let a = (1.0 - 0.75 * p).sqrt();
        let b = p.sqrt() / 2.0;
        let kraus = [pauli_matrix(0), pauli_matrix(1), pauli_matrix(2), pauli_matrix(3)]
            .into_iter()
            .zip([a, b, b, b])
            .map(|(m, c)| DenseOperator::new(m * C64::from(c), vec![2]).unwrap())
            .collect();
        Self::new(kraus, Picture::Schrodinger)
    }

    pub fn from_text(text: &str, picture: Picture) -> Result<Self> {
        Self::new(parse_operators(text)?, picture)
    }

    pub fn kraus(&self) -> &[DenseOperator] {
        &self.kraus
    }

    pub fn picture(&self) -> Picture {
        self.picture
    }

    pub fn dims(&self) -> &[usize] {
        self.kraus[0].dims()
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].dim()
    }

    /// Kraus operators in Schrödinger form, `E(O) = Σ K O K†`.
    pub fn schrodinger_kraus(&self) -> Vec<DenseOperator> {
        match self.picture {
            Picture::Schrodinger => self.kraus.clone(),
            Picture::Heisenberg => self.kraus.iter().map(|k| k.adjoint()).collect(),
        }
    }

    pub fn apply(&self, o: &DenseOperator) -> Result<DenseOperator> {
        apply_channel(self, o)
    }

    /// Single Kraus operator when the channel is unitary.
    pub fn as_unitary(&self) -> Option<DenseOperator> {
        let ks = self.schrodinger_kraus();
        (ks.len() == 1 && ks[0].is_unitary(1e-10)).then(|| ks[0].clone())
    }

    /// `k` copies of `self` on the leading qubits and identity on the rest.
    pub fn extend_identity(&self, n_rest: usize) -> Self {
        if n_rest == 0 {
            return self.clone();
        }
        let id = DenseOperator::identity(&vec![2; n_rest]);
        Self {
            kraus: self.kraus.iter().map(|k| k.kron(&id)).collect(),
            picture: self.picture,
        }
    }

    /// Tensor power `E^{⊗k}`.
    pub fn tensor_power(&self, k: usize) -> Self {
        assert!(k >= 1);
        let mut out = self.kraus.clone();
        for _ in 1..k {
            out = out
                .iter()
                .flat_map(|a| self.kraus.iter().map(move |b| a.kron(b)))
                .collect();
        }
        Self {
            kraus: out,
            picture: self.picture,
        }
    }

    /// Conjugates every Kraus operator, `K ↦ V† K V`.
    pub fn sandwich(&self, v: &DenseOperator) -> Result<Self> {
        let vd = v.adjoint();
        let kraus = self
            .kraus
            .iter()
            .map(|k| vd.mul(k)?.mul(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kraus,
            picture: self.picture,
        })
    }

    pub fn natural_representation(&self) -> NaturalRep {
        natural_representation(self)
    }
}

pub fn apply_channel(e: &QuantumChannel, o: &DenseOperator) -> Result<DenseOperator> {
    if o.dim() != e.dim() {
        return Err(Error::DimensionMismatch(format!(
            "channel on {} cannot act on {}",
            e.dim(),
            o.dim()
        )));
    }
    let mut acc = CMatrix::zeros(o.dim(), o.dim());
    for k in &e.kraus {
        acc += match e.picture {
            Picture::Schrodinger => &k.matrix * &o.matrix * k.matrix.adjoint(),
            Picture::Heisenberg => k.matrix.adjoint() * &o.matrix * &k.matrix,
        };
    }
    DenseOperator::new(acc, o.dims.clone())
}

/// `X = Σ K ⊗ K†` for the Schrödinger Kraus set.
#[derive(Clone, Debug)]
pub struct NaturalRep {
    x: DenseOperator,
}

impl NaturalRep {
    pub fn new(x: DenseOperator) -> Self {
        Self { x }
    }

    pub fn x(&self) -> &DenseOperator {
        &self.x
    }

    /// `‖X/2‖₂²` for a single-qubit channel (generally `‖X‖₂²/d²`).
    pub fn normalized_hs_sq(&self) -> f64 {
        let d = (self.x.dim() as f64).sqrt();
        self.x.norm_sq() / (d * d)
    }

    pub fn trace(&self) -> C64 {
        self.x.trace()
    }
}

pub fn natural_representation(e: &QuantumChannel) -> NaturalRep {
    let ks = e.schrodinger_kraus();
    let mut x = ks[0].kron(&ks[0].adjoint());
    for k in &ks[1..] {
        x = x.add(&k.kron(&k.adjoint())).unwrap();
    }
    NaturalRep { x }
}

/// Operator-Schmidt coefficients of `O` across the cut `a_sites | rest`.
///
/// With `O` reordered so the A factors lead, the realigned matrix is
/// `R[a·d_A + a', b·d_B + b'] = O[a·d_B + b, a'·d_B + b']`, a `d_A² × d_B²`
/// matrix whose squared singular values divided by `d` are the `λ_i`.
/// They sum to `‖O‖₂²/d`. Returned in decreasing order.
pub fn operator_schmidt(o: &DenseOperator, a_sites: &[usize]) -> Result<Vec<f64>> {
    let r = realign(o, a_sites)?;
    if r.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::InvalidArgument("zero operator has no Schmidt decomposition".into()));
    }
    let d = o.dim() as f64;
    let mut lam: Vec<f64> = r
        .singular_values_unordered()
        .iter()
        .map(|s| s * s / d)
        .collect();
    lam.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(lam)
}

/// The realigned matrix used by [`operator_schmidt`].
pub fn realign(o: &DenseOperator, a_sites: &[usize]) -> Result<CMatrix> {
    let n = o.dims().len();
    let mut a = a_sites.to_vec();
    a.sort_unstable();
    a.dedup();
    if a.iter().any(|&s| s >= n) || a.len() != a_sites.len() {
        return Err(Error::InvalidArgument(format!("bad cut {a_sites:?}")));
    }
    let b: Vec<usize> = (0..n).filter(|i| !a.contains(i)).collect();
    let mut order = a.clone();
    order.extend(&b);
    let p = o.permute_subsystems(&order)?;
    let da: usize = a.iter().map(|&i| o.dims()[i]).product();
    let db: usize = b.iter().map(|&i| o.dims()[i]).product();
    Ok(CMatrix::from_fn(da * da, db * db, |row, col| {
        let (x, xp) = (row / da, row % da);
        let (y, yp) = (col / db, col % db);
        p.matrix[(x * db + y, xp * db + yp)]
    }))
}

/// Single-qubit Pauli matrix: 0 = I, 1 = X, 2 = Y, 3 = Z.
pub fn pauli_matrix(which: usize) -> CMatrix {
    let (a, b, c, d) = match which {
        0 => (ONE, ZERO, ZERO, ONE),
        1 => (ZERO, ONE, ONE, ZERO),
        2 => (ZERO, -I, I, ZERO),
        3 => (ONE, ZERO, ZERO, -ONE),
        _ => panic!("pauli index {which} out of range"),
    };
    CMatrix::from_row_slice(2, 2, &[a, b, c, d])
}

/// `exp(-i θ/2 n·σ)` for a unit vector `n` given by polar angle `gamma` and
/// azimuth `phi`.
pub fn axis_rotation(theta: f64, gamma: f64, phi: f64) -> DenseOperator {
    let n = [gamma.sin() * phi.cos(), gamma.sin() * phi.sin(), gamma.cos()];
    rotation_about(theta, n)
}

/// `exp(-i θ/2 n·σ)`; `n` is normalized internally.
pub fn rotation_about(theta: f64, n: [f64; 3]) -> DenseOperator {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut m = pauli_matrix(0) * C64::from(c);
    for (i, ni) in n.iter().enumerate() {
        m -= pauli_matrix(i + 1) * (I * (s * ni / norm));
    }
    DenseOperator::new(m, vec![2]).unwrap()
}

pub fn rz(theta: f64) -> DenseOperator {
    rotation_about(theta, [0.0, 0.0, 1.0])
}

pub fn t_gate() -> DenseOperator {
    let m = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]);
    DenseOperator::new(m, vec![2]).unwrap()
}

pub fn s_gate() -> DenseOperator {
    DenseOperator::new(CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, I]), vec![2]).unwrap()
}

pub fn hadamard() -> DenseOperator {
    let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    DenseOperator::new(CMatrix::from_row_slice(2, 2, &[h, h, h, -h]), vec![2]).unwrap()
}

/// Haar-random `d × d` unitary: QR of a complex Ginibre matrix with the
/// diagonal of R made positive.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian_c64(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { ONE };
        for i in 0..d {
            u[(i, j)] *= ph;
        }
    }
    u
}

/// Haar-random unit vector in `C^d`.
pub fn haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> nalgebra::DVector<C64> {
    let v = nalgebra::DVector::from_fn(d, |_, _| gaussian_c64(rng));
    let n = v.norm();
    v / C64::from(n)
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_op(dims: &[usize], rng: &mut ChaCha8Rng) -> DenseOperator {
        let d = dims.iter().product();
        DenseOperator::new(CMatrix::from_fn(d, d, |_, _| gaussian_c64(rng)), dims.to_vec()).unwrap()
    }

    #[test]
    fn kron_entrywise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_op(&[2], &mut rng);
        let b = random_op(&[2], &mut rng);
        let k = a.kron(&b);
        for i in 0..4 {
            for j in 0..4 {
                let want = a.matrix()[(i / 2, j / 2)] * b.matrix()[(i % 2, j % 2)];
                assert!((k.matrix()[(i, j)] - want).norm() < 1e-15);
            }
        }
        let z = DenseOperator::new(pauli_matrix(3), vec![2]).unwrap();
        let zz = z.kron(&z);
        let diag: Vec<f64> = (0..4).map(|i| zz.matrix()[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn partial_trace_against_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let o = random_op(&[2, 2, 2], &mut rng);
        // keep qubit 1, trace 0 and 2
        let pt = o.partial_trace(&[1]).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let mut s = ZERO;
                for a in 0..2 {
                    for b in 0..2 {
                        s += o.matrix()[(a * 4 + r * 2 + b, a * 4 + c * 2 + b)];
                    }
                }
                assert!((pt.matrix()[(r, c)] - s).norm() < 1e-13);
            }
        }
        assert!((o.partial_trace(&[]).unwrap().trace() - o.trace()).norm() < 1e-12);
    }

    #[test]
    fn maximally_entangled_marginal() {
        let v = [1.0, 0.0, 0.0, 1.0].map(|x| C64::from(x / 2f64.sqrt()));
        let m = CMatrix::from_fn(4, 4, |i, j| v[i] * v[j].conj());
        let rho = DenseOperator::new(m, vec![2, 2]).unwrap();
        let red = rho.partial_trace(&[0]).unwrap();
        assert!(red.max_abs_diff(&DenseOperator::identity(&[2]).scale(C64::from(0.5))) < 1e-15);
    }

    #[test]
    fn swap_operator_and_homomorphism() {
        let s = permutation_operator(&[1, 0], 2, 2).unwrap();
        let mut want = CMatrix::zeros(4, 4);
        for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            want[(r, c)] = ONE;
        }
        assert_eq!(s.matrix(), &want);
        let a = [1, 2, 0, 3];
        let b = [0, 3, 1, 2];
        let ab: Vec<usize> = (0..4).map(|j| a[b[j]]).collect();
        let ta = permutation_operator(&a, 2, 4).unwrap();
        let tb = permutation_operator(&b, 2, 4).unwrap();
        let tab = permutation_operator(&ab, 2, 4).unwrap();
        assert!(ta.mul(&tb).unwrap().max_abs_diff(&tab) < 1e-15);
    }

    #[test]
    fn permutation_moves_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vs: Vec<_> = (0..3).map(|_| haar_state(2, &mut rng)).collect();
        let sigma = [2usize, 0, 1];
        let t = permutation_operator(&sigma, 2, 3).unwrap();
        let prod = |v: [&nalgebra::DVector<C64>; 3]| v[0].kronecker(v[1]).kronecker(v[2]);
        let lhs = t.matrix() * prod([&vs[0], &vs[1], &vs[2]]);
        // slot sigma[a] receives v_a
        let mut slots = [&vs[0]; 3];
        for a in 0..3 {
            slots[sigma[a]] = &vs[a];
        }
        let rhs = prod(slots);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn copy_major_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let o = random_op(&[2; 4], &mut rng);
        let c = site_to_copy_major(&o, 2, 2).unwrap();
        let back = copy_to_site_major(&c, 2, 2).unwrap();
        assert!(back.max_abs_diff(&o) < 1e-15);
    }

    #[test]
    fn schmidt_examples() {
        let cnot = DenseOperator::from_rows(&[
            &[ONE, ZERO, ZERO, ZERO],
            &[ZERO, ONE, ZERO, ZERO],
            &[ZERO, ZERO, ZERO, ONE],
            &[ZERO, ZERO, ONE, ZERO],
        ])
        .unwrap();
        let l = operator_schmidt(&cnot, &[0]).unwrap();
        assert!((l[0] - 0.5).abs() < 1e-12 && (l[1] - 0.5).abs() < 1e-12 && l[2].abs() < 1e-12);
        let swap = permutation_operator(&[1, 0], 2, 2).unwrap();
        let l = operator_schmidt(&swap, &[0]).unwrap();
        assert!(l.iter().all(|x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn schmidt_against_basis_expansion() {
        // Coefficients in the normalized Pauli product basis give the same
        // spectrum as the realignment.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let o = random_op(&[2, 2], &mut rng);
        let mut c = CMatrix::zeros(4, 4);
        for a in 0..4 {
            for b in 0..4 {
                let p = pauli_matrix(a).kronecker(&pauli_matrix(b));
                c[(a, b)] = (p.adjoint() * o.matrix()).trace() / C64::from(4.0);
            }
        }
        // O/√d = Σ c_ab (σ_a/√2)⊗(σ_b/√2) · 2/√d
        let mut want: Vec<f64> = c.singular_values().iter().map(|s| s * s * 4.0 / 4.0).collect();
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let got = operator_schmidt(&o, &[0]).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn depolarizing_action() {
        let p = 0.3;
        let e = QuantumChannel::depolarizing(p).unwrap();
        for a in 1..4 {
            let pa = DenseOperator::new(pauli_matrix(a), vec![2]).unwrap();
            let out = e.apply(&pa).unwrap();
            assert!(out.max_abs_diff(&pa.scale(C64::from(1.0 - p))) < 1e-14);
        }
        let full = QuantumChannel::depolarizing(1.0).unwrap();
        let id = DenseOperator::identity(&[2]);
        assert!(full.apply(&id).unwrap().max_abs_diff(&id) < 1e-14);
    }

    #[test]
    fn natural_rep_unitary_and_mixing() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let u = DenseOperator::new(haar_unitary(2, &mut rng), vec![2]).unwrap();
            let x = QuantumChannel::unitary(u).unwrap().natural_representation();
            assert!((x.normalized_hs_sq() - 1.0).abs() < 1e-12);
        }
        assert!(QuantumChannel::identity(&[2])
            .natural_representation()
            .x()
            .max_abs_diff(&DenseOperator::identity(&[2, 2]))
            < 1e-15);
    }

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let o = random_op(&[2, 3], &mut rng);
        let back = DenseOperator::from_text(&o.to_text()).unwrap();
        assert_eq!(back, o);
    }

    #[test]
    fn haar_determinant_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = haar_unitary(2, &mut rng);
        assert!((u.determinant().norm() - 1.0).abs() < 1e-12);
    }
}
