//! Pauli strings and Clifford tableaus in the binary symplectic picture.
//!
//! A [`PauliString`] on `n ≤ 64` qubits is `i^phase · σ_1 ⊗ … ⊗ σ_n` with
//! `σ_j ∈ {I, X, Y, Z}` Hermitian (`(x,z) = (1,1)` means `Y`). Qubit `j` is
//! the `j`-th letter of the text form and the `j`-th tensor factor; in the
//! masks it is bit `n-1-j`, so a mask doubles as a computational-basis index.
//!
//! A [`CliffordTableau`] stores the images `C X_j C†` (rows `0..n`) and
//! `C Z_j C†` (rows `n..2n`). Row `r` of the symplectic matrix is the
//! `(x | z)` bit pattern of image `r`; phase bit `r` is set when that image
//! carries a minus sign.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;

use crate::dense_ops::{CMatrix, DenseOperator, C64, I, ONE, ZERO};
use crate::error::{cap, Error, Result};

pub const MAX_QUBITS: usize = 64;
pub const PAULI_DENSE_CAP: usize = 12;
pub const TABLEAU_DENSE_CAP: usize = 6;
pub const PAULI_ENUM_CAP: usize = 8;
pub const CLIFFORD_ENUM_CAP: usize = 2;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: u8,
}

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn parity(v: u64) -> u32 {
    v.count_ones() & 1
}

impl PauliString {
    pub fn new(n: usize, x: u64, z: u64, phase: u8) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!("n_qubits = {n} outside 1..={MAX_QUBITS}")));
        }
        if (x | z) & !mask(n) != 0 {
            return Err(Error::InvalidArgument("bit pattern wider than n_qubits".into()));
        }
        Ok(Self { n, x, z, phase: phase & 3 })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, 0, 0, 0).unwrap()
    }

    /// Single-qubit letter (`0..4` = I, X, Y, Z) on `qubit`.
    pub fn single(n: usize, qubit: usize, letter: usize) -> Result<Self> {
        if qubit >= n {
            return Err(Error::InvalidArgument(format!("qubit {qubit} out of range")));
        }
        let bit = 1u64 << (n - 1 - qubit);
        let (x, z) = match letter {
            0 => (0, 0),
            1 => (bit, 0),
            2 => (bit, bit),
            3 => (0, bit),
            _ => return Err(Error::InvalidArgument(format!("letter {letter}"))),
        };
        Self::new(n, x, z, 0)
    }

    /// Builds from per-qubit bit vectors (qubit 0 first).
    pub fn from_bits(x_bits: &[bool], z_bits: &[bool], phase: u8) -> Result<Self> {
        if x_bits.len() != z_bits.len() {
            return Err(Error::DimensionMismatch("x and z lengths differ".into()));
        }
        let n = x_bits.len();
        let pack = |b: &[bool]| b.iter().fold(0u64, |acc, &v| (acc << 1) | v as u64);
        Self::new(n, pack(x_bits), pack(z_bits), phase)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn x_bits(&self) -> Vec<bool> {
        (0..self.n).map(|j| (self.x >> (self.n - 1 - j)) & 1 == 1).collect()
    }

    pub fn z_bits(&self) -> Vec<bool> {
        (0..self.n).map(|j| (self.z >> (self.n - 1 - j)) & 1 == 1).collect()
    }

    /// Letter index `0..4` (I,X,Y,Z) on `qubit`.
    pub fn letter(&self, qubit: usize) -> usize {
        let s = self.n - 1 - qubit;
        match ((self.x >> s) & 1, (self.z >> s) & 1) {
            (0, 0) => 0,
            (1, 0) => 1,
            (1, 1) => 2,
            _ => 3,
        }
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    pub fn with_phase(&self, phase: u8) -> Self {
        Self { phase: phase & 3, ..*self }
    }

    pub fn phaseless(&self) -> Self {
        self.with_phase(0)
    }

    /// Exponent `e` with `self = i^e X^x Z^z`.
    fn xz_exponent(&self) -> u32 {
        (self.phase as u32 + (self.x & self.z).count_ones()) & 3
    }

    fn from_xz_exponent(n: usize, x: u64, z: u64, e: u32) -> Self {
        let phase = (e + 4 - ((x & z).count_ones() & 3)) & 3;
        Self { n, x, z, phase: phase as u8 }
    }

    /// `self · other` with exact ℤ₄ phase.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("{} vs {} qubits", self.n, other.n)));
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, o: &Self) -> Self {
        // X^a Z^b X^c Z^d = (-1)^{b·c} X^{a+c} Z^{b+d}
        let e = self.xz_exponent() + o.xz_exponent() + 2 * (self.z & o.x).count_ones();
        Self::from_xz_exponent(self.n, self.x ^ o.x, self.z ^ o.z, e & 3)
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("{} vs {} qubits", self.n, other.n)));
        }
        Ok(symplectic_form((self.x, self.z), (other.x, other.z)) == 0)
    }

    /// Applies the operator to a state vector (basis index = x/z mask order).
    pub fn apply_to(&self, v: &DVector<C64>) -> DVector<C64> {
        let pref = I.powu(self.xz_exponent());
        let mut out = DVector::from_element(v.len(), ZERO);
        for (b, amp) in v.iter().enumerate() {
            // X^x Z^z |b> = (-1)^{z·b} |b ⊕ x>
            let sign = if parity(self.z & b as u64) == 1 { -pref } else { pref };
            out[b ^ self.x as usize] += sign * amp;
        }
        out
    }

    pub fn to_dense(&self) -> Result<DenseOperator> {
        cap("Pauli dense qubits", self.n, PAULI_DENSE_CAP)?;
        let d = 1usize << self.n;
        let pref = I.powu(self.xz_exponent());
        let mut m = CMatrix::zeros(d, d);
        for b in 0..d {
            let sign = if parity(self.z & b as u64) == 1 { -pref } else { pref };
            m[(b ^ self.x as usize, b)] = sign;
        }
        DenseOperator::new(m, vec![2; self.n])
    }

    /// Lexicographic index in `(x, z)`: `x · 2ⁿ + z`.
    pub fn index(&self) -> u128 {
        ((self.x as u128) << self.n) | self.z as u128
    }
}

pub(crate) fn symplectic_form(a: (u64, u64), b: (u64, u64)) -> u32 {
    parity((a.0 & b.1) ^ (a.1 & b.0))
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = ["+", "+i", "-", "-i"][self.phase as usize];
        write!(f, "{sign}")?;
        for j in 0..self.n {
            write!(f, "{}", ['I', 'X', 'Y', 'Z'][self.letter(j)])?;
        }
        Ok(())
    }
}

/// Text form: optional sign `+`, `-`, `+i`, `-i` (or `i`), then one letter
/// per qubit from `IXYZ`.
impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (1, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else {
            (0, s)
        };
        let mut x = Vec::new();
        let mut z = Vec::new();
        for c in body.chars() {
            let (a, b) = match c {
                'I' => (false, false),
                'X' => (true, false),
                'Y' => (true, true),
                'Z' => (false, true),
                _ => return Err(Error::Parse(format!("bad Pauli letter '{c}' in '{s}'"))),
            };
            x.push(a);
            z.push(b);
        }
        PauliString::from_bits(&x, &z, phase)
    }
}

/// All `4ⁿ` phaseless strings in lexicographic `(x, z)` order.
pub fn enumerate_paulis(n: usize) -> Result<impl Iterator<Item = PauliString>> {
    enumerate_paulis_capped(n, PAULI_ENUM_CAP)
}

pub fn enumerate_paulis_capped(n: usize, limit: usize) -> Result<impl Iterator<Item = PauliString>> {
    cap("Pauli enumeration qubits", n, limit)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let total = 1u64 << (2 * n);
    Ok((0..total).map(move |i| PauliString {
        n,
        x: i >> n,
        z: i & mask(n),
        phase: 0,
    }))
}

pub fn pauli_mul(p: &PauliString, q: &PauliString) -> Result<PauliString> {
    p.mul(q)
}

pub fn commutes(p: &PauliString, q: &PauliString) -> Result<bool> {
    p.commutes(q)
}

pub fn conjugate_pauli(c: &CliffordTableau, p: &PauliString) -> Result<PauliString> {
    c.conjugate(p)
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CliffordTableau {
    n: usize,
    /// Images of X_0..X_{n-1}, Z_0..Z_{n-1}; each has phase 0 or 2.
    images: Vec<PauliString>,
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Self {
        let images = (0..n)
            .map(|j| PauliString::single(n, j, 1).unwrap())
            .chain((0..n).map(|j| PauliString::single(n, j, 3).unwrap()))
            .collect();
        Self { n, images }
    }

    /// Validates Hermitian images and the symplectic relations.
    pub fn from_images(images: Vec<PauliString>) -> Result<Self> {
        if images.is_empty() || images.len() % 2 != 0 {
            return Err(Error::InvalidArgument("need 2n generator images".into()));
        }
        let n = images.len() / 2;
        for p in &images {
            if p.n != n {
                return Err(Error::DimensionMismatch("image width differs from n".into()));
            }
            if !p.is_hermitian() {
                return Err(Error::InvalidArgument(format!("image {p} is not Hermitian")));
            }
        }
        let t = Self { n, images };
        if !t.is_symplectic() {
            return Err(Error::InvalidArgument("images violate the symplectic relations".into()));
        }
        Ok(t)
    }

    /// Builds from a `2n × 2n` binary matrix (rows `(x | z)`) and sign bits.
    pub fn from_symplectic(matrix: &[Vec<bool>], phase_bits: &[bool]) -> Result<Self> {
        let m = matrix.len();
        if m % 2 != 0 || phase_bits.len() != m || matrix.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("symplectic matrix must be 2n x 2n".into()));
        }
        let n = m / 2;
        let images = matrix
            .iter()
            .zip(phase_bits)
            .map(|(row, &s)| PauliString::from_bits(&row[..n], &row[n..], if s { 2 } else { 0 }))
            .collect::<Result<Vec<_>>>()?;
        Self::from_images(images)
    }

    pub fn hadamard(n: usize, q: usize) -> Self {
        let mut t = Self::identity(n);
        t.images[q] = PauliString::single(n, q, 3).unwrap();
        t.images[n + q] = PauliString::single(n, q, 1).unwrap();
        t
    }

    /// Phase gate `S = diag(1, i)`: X ↦ Y, Z ↦ Z.
    pub fn phase_s(n: usize, q: usize) -> Self {
        let mut t = Self::identity(n);
        t.images[q] = PauliString::single(n, q, 2).unwrap();
        t
    }

    pub fn cnot(n: usize, control: usize, target: usize) -> Self {
        assert_ne!(control, target);
        let mut t = Self::identity(n);
        let xc = PauliString::single(n, control, 1).unwrap();
        let xt = PauliString::single(n, target, 1).unwrap();
        let zc = PauliString::single(n, control, 3).unwrap();
        let zt = PauliString::single(n, target, 3).unwrap();
        t.images[control] = xc.mul_unchecked(&xt);
        t.images[n + target] = zc.mul_unchecked(&zt);
        t
    }

    /// Conjugation by the Pauli operator `p` (flips signs of anticommuting images).
    pub fn pauli(p: &PauliString) -> Self {
        let n = p.n;
        let mut t = Self::identity(n);
        for img in t.images.iter_mut() {
            if symplectic_form((img.x, img.z), (p.x, p.z)) == 1 {
                img.phase = (img.phase + 2) & 3;
            }
        }
        t
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn images(&self) -> &[PauliString] {
        &self.images
    }

    pub fn symplectic_matrix(&self) -> Vec<Vec<bool>> {
        self.images
            .iter()
            .map(|p| {
                let mut row = p.x_bits();
                row.extend(p.z_bits());
                row
            })
            .collect()
    }

    pub fn phase_bits(&self) -> Vec<bool> {
        self.images.iter().map(|p| p.phase == 2).collect()
    }

    /// Checks `M J Mᵀ = J` on the generator images.
    pub fn is_symplectic(&self) -> bool {
        let n = self.n;
        (0..2 * n).all(|a| {
            (0..2 * n).all(|b| {
                let want = u32::from(a + n == b || b + n == a);
                let (p, q) = (&self.images[a], &self.images[b]);
                symplectic_form((p.x, p.z), (q.x, q.z)) == want
            })
        })
    }

    /// `C P C†`.
    pub fn conjugate(&self, p: &PauliString) -> Result<PauliString> {
        if p.n != self.n {
            return Err(Error::DimensionMismatch(format!("{}-qubit Pauli, {}-qubit tableau", p.n, self.n)));
        }
        Ok(self.conjugate_unchecked(p))
    }

    pub(crate) fn conjugate_unchecked(&self, p: &PauliString) -> PauliString {
        let n = self.n;
        // P = i^e (Π X_j^{x_j})(Π Z_j^{z_j})
        let mut acc = PauliString::from_xz_exponent(n, 0, 0, p.xz_exponent());
        for j in 0..n {
            if (p.x >> (n - 1 - j)) & 1 == 1 {
                acc = acc.mul_unchecked(&self.images[j]);
            }
        }
        for j in 0..n {
            if (p.z >> (n - 1 - j)) & 1 == 1 {
                acc = acc.mul_unchecked(&self.images[n + j]);
            }
        }
        acc
    }

    /// `self ∘ other`: conjugating by the result equals conjugating by
    /// `other` first and then by `self`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch("tableau sizes differ".into()));
        }
        Ok(Self {
            n: self.n,
            images: other.images.iter().map(|p| self.conjugate_unchecked(p)).collect(),
        })
    }

    pub fn inverse(&self) -> Self {
        let n = self.n;
        // For symplectic M (rows = images), M⁻¹ = J Mᵀ J. The preimage of
        // generator g has bits given by symplectic products with the images.
        let mut images = Vec::with_capacity(2 * n);
        for g in 0..2 * n {
            let target = self.identity_generator(g);
            let mut x = 0u64;
            let mut z = 0u64;
            for j in 0..n {
                let bit = 1u64 << (n - 1 - j);
                // coefficient of X_j in the preimage is <target, img(Z_j)>
                if symplectic_form((target.x, target.z), (self.images[n + j].x, self.images[n + j].z)) == 1 {
                    x |= bit;
                }
                if symplectic_form((target.x, target.z), (self.images[j].x, self.images[j].z)) == 1 {
                    z |= bit;
                }
            }
            let pre = PauliString::new(n, x, z, 0).unwrap();
            let img = self.conjugate_unchecked(&pre);
            debug_assert!(img.x == target.x && img.z == target.z);
            let phase = if img.phase == 0 { 0 } else { 2 };
            images.push(pre.with_phase(phase));
        }
        Self { n, images }
    }

    fn identity_generator(&self, g: usize) -> PauliString {
        if g < self.n {
            PauliString::single(self.n, g, 1).unwrap()
        } else {
            PauliString::single(self.n, g - self.n, 3).unwrap()
        }
    }

    /// Unitary with `U P U† = conjugate(P)`; the global phase is arbitrary.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        self.to_dense_capped(TABLEAU_DENSE_CAP)
    }

    /// [`CliffordTableau::to_dense`] with an explicit qubit cap.
    pub fn to_dense_capped(&self, limit: usize) -> Result<DenseOperator> {
        cap("tableau dense qubits", self.n, limit)?;
        let n = self.n;
        let d = 1usize << n;
        // C|0…0> is the +1 eigenstate of every C Z_j C†.
        let mut psi0 = None;
        for start in 0..d {
            let mut v = DVector::from_element(d, ZERO);
            v[start] = ONE;
            for j in 0..n {
                let sv = self.images[n + j].apply_to(&v);
                v = (v + sv) * C64::from(0.5);
            }
            let norm = v.norm();
            if norm > 1e-6 {
                psi0 = Some(v / C64::from(norm));
                break;
            }
        }
        let psi0 = psi0.ok_or_else(|| Error::Numerical("no stabilizer state found".into()))?;
        let mut m = CMatrix::zeros(d, d);
        for col in 0..d {
            let mut v = psi0.clone();
            for j in 0..n {
                if (col >> (n - 1 - j)) & 1 == 1 {
                    v = self.images[j].apply_to(&v);
                }
            }
            m.set_column(col, &v);
        }
        DenseOperator::new(m, vec![2; n])
    }

    /// Text form: one signed image per line, X images first.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (r, p) in self.images.iter().enumerate() {
            let gen = if r < self.n { format!("X{r}") } else { format!("Z{}", r - self.n) };
            s.push_str(&format!("{gen} {p}\n"));
        }
        s
    }

    /// Parses [`CliffordTableau::to_text`] output. A line may omit the
    /// generator label; blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let images = text
            .lines()
            .map(|l| l.split('#').next().unwrap().trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.split_whitespace().last().unwrap().parse::<PauliString>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_images(images)
    }

    /// Exactly uniform random Clifford (modulo global phase).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        random_clifford(n, rng)
    }
}

type Vec2n = (u64, u64);

fn add(a: Vec2n, b: Vec2n) -> Vec2n {
    (a.0 ^ b.0, a.1 ^ b.1)
}

fn standard_basis(n: usize) -> Vec<Vec2n> {
    (0..n)
        .map(|j| (1u64 << j, 0))
        .chain((0..n).map(|j| (0, 1u64 << j)))
        .collect()
}

fn combo(basis: &[Vec2n], coeffs: u128) -> Vec2n {
    basis
        .iter()
        .enumerate()
        .filter(|(i, _)| (coeffs >> i) & 1 == 1)
        .fold((0, 0), |acc, (_, &b)| add(acc, b))
}

/// GF(2) row reduction; returns an independent spanning subset.
fn reduce_basis(vectors: Vec<Vec2n>) -> Vec<Vec2n> {
    let mut out: Vec<(Vec2n, u32)> = Vec::new();
    for mut v in vectors {
        for &(b, piv) in &out {
            if bit_at(v, piv) {
                v = add(v, b);
            }
        }
        if v != (0, 0) {
            let piv = if v.0 != 0 { v.0.trailing_zeros() } else { 64 + v.1.trailing_zeros() };
            for (b, _) in out.iter_mut() {
                if bit_at(*b, piv) {
                    *b = add(*b, v);
                }
            }
            out.push((v, piv));
        }
    }
    out.into_iter().map(|(v, _)| v).collect()
}

fn bit_at(v: Vec2n, piv: u32) -> bool {
    if piv < 64 {
        (v.0 >> piv) & 1 == 1
    } else {
        (v.1 >> (piv - 64)) & 1 == 1
    }
}

/// Restricts `basis` (spanning a symplectic subspace containing `v`, `w`
/// with `<v,w> = 1`) to the symplectic complement of `span{v, w}`.
fn complement(basis: &[Vec2n], v: Vec2n, w: Vec2n) -> Vec<Vec2n> {
    let projected = basis
        .iter()
        .map(|&b| {
            let mut c = b;
            if symplectic_form(b, w) == 1 {
                c = add(c, v);
            }
            if symplectic_form(b, v) == 1 {
                c = add(c, w);
            }
            c
        })
        .collect();
    reduce_basis(projected)
}

fn uniform_bits<R: Rng + ?Sized>(rng: &mut R, m: usize) -> u128 {
    let hi = if m == 128 { u128::MAX } else { (1u128 << m) - 1 };
    rng.random_range(0..=hi)
}

fn images_from_pairs(n: usize, pairs: &[(Vec2n, Vec2n)], signs: u128) -> CliffordTableau {
    // internal vectors use bit j for qubit j; masks use bit n-1-j
    let to_pauli = |v: Vec2n| {
        let rev = |m: u64| (0..n).fold(0u64, |acc, j| acc | (((m >> j) & 1) << (n - 1 - j)));
        PauliString::new(n, rev(v.0), rev(v.1), 0).unwrap()
    };
    let mut images = vec![PauliString::identity(n); 2 * n];
    for (j, &(v, w)) in pairs.iter().enumerate() {
        images[j] = to_pauli(v);
        images[n + j] = to_pauli(w);
    }
    for (r, img) in images.iter_mut().enumerate() {
        if (signs >> r) & 1 == 1 {
            img.phase = 2;
        }
    }
    CliffordTableau { n, images }
}

/// Exactly uniform sampler over `Sp(2n, 2) × {signs}`.
///
/// Builds a symplectic basis one pair at a time: `v_j` uniform over the
/// nonzero vectors of the current symplectic subspace `W`, then `w_j`
/// uniform over `{w ∈ W : <v_j, w> = 1}` (a uniform `u ∈ W`, shifted by a
/// fixed `t` with `<v_j, t> = 1` when `<v_j, u> = 0`; this map is exactly
/// two-to-one). `W` then shrinks to the complement of `span{v_j, w_j}`.
/// Every choice sequence is drawn with equal probability and each yields a
/// distinct tableau, so no rejection is involved.
pub fn random_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CliffordTableau> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!("n = {n} outside 1..={MAX_QUBITS}")));
    }
    let mut basis = standard_basis(n);
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let m = basis.len();
        let c = loop_free_nonzero(rng, m);
        let v = combo(&basis, c);
        let u = combo(&basis, uniform_bits(rng, m));
        let t = *basis
            .iter()
            .find(|&&b| symplectic_form(v, b) == 1)
            .expect("symplectic subspace has a partner");
        let w = if symplectic_form(v, u) == 1 { u } else { add(u, t) };
        pairs.push((v, w));
        basis = complement(&basis, v, w);
    }
    let signs = uniform_bits(rng, 2 * n);
    Ok(images_from_pairs(n, &pairs, signs))
}

fn loop_free_nonzero<R: Rng + ?Sized>(rng: &mut R, m: usize) -> u128 {
    let hi = if m == 128 { u128::MAX } else { (1u128 << m) - 1 };
    rng.random_range(1..=hi)
}

/// Every Clifford on `n ≤ 2` qubits modulo phase (24 for n=1, 11520 for n=2),
/// using the same choice structure as [`random_clifford`].
pub fn enumerate_cliffords(n: usize) -> Result<Vec<CliffordTableau>> {
    cap("Clifford enumeration qubits", n, CLIFFORD_ENUM_CAP)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let mut symplectic = Vec::new();
    enumerate_pairs(&standard_basis(n), &mut Vec::new(), n, &mut symplectic);
    let mut out = Vec::with_capacity(symplectic.len() << (2 * n));
    for pairs in &symplectic {
        for signs in 0..(1u128 << (2 * n)) {
            out.push(images_from_pairs(n, pairs, signs));
        }
    }
    Ok(out)
}

fn enumerate_pairs(basis: &[Vec2n], prefix: &mut Vec<(Vec2n, Vec2n)>, n: usize, out: &mut Vec<Vec<(Vec2n, Vec2n)>>) {
    if prefix.len() == n {
        out.push(prefix.clone());
        return;
    }
    let m = basis.len();
    for c in 1..(1u128 << m) {
        let v = combo(basis, c);
        for cu in 0..(1u128 << m) {
            let w = combo(basis, cu);
            if symplectic_form(v, w) != 1 {
                continue;
            }
            prefix.push((v, w));
            enumerate_pairs(&complement(basis, v, w), prefix, n, out);
            prefix.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_qubit_algebra() {
        assert_eq!(p("X").mul(&p("X")).unwrap(), p("I"));
        let xz = p("X").mul(&p("Z")).unwrap();
        assert_eq!(xz, p("-iY"));
        assert_eq!(xz.phase(), 3);
        assert!(p("X").commutes(&p("X")).unwrap());
        assert!(!p("X").commutes(&p("Z")).unwrap());
    }

    #[test]
    fn text_forms() {
        for s in ["+XIZY", "-ZZ", "+iY", "-iIX"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(p("XY").to_string(), "+XY");
        assert!("+XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn dense_z() {
        let z = p("Z").to_dense().unwrap();
        assert_eq!(z.matrix()[(0, 0)], ONE);
        assert_eq!(z.matrix()[(1, 1)], -ONE);
    }

    #[test]
    fn standard_gates() {
        let h = CliffordTableau::hadamard(1, 0);
        assert_eq!(h.conjugate(&p("Z")).unwrap(), p("X"));
        let cx = CliffordTableau::cnot(2, 0, 1);
        assert_eq!(cx.conjugate(&p("XI")).unwrap(), p("XX"));
        assert_eq!(cx.conjugate(&p("IZ")).unwrap(), p("ZZ"));
        let s = CliffordTableau::phase_s(1, 0);
        assert_eq!(s.conjugate(&p("Y")).unwrap(), p("-X"));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_cliffords(1).unwrap().len(), 24);
        let all2 = enumerate_cliffords(2).unwrap();
        assert_eq!(all2.len(), 11520);
        let set: std::collections::HashSet<_> = all2.iter().collect();
        assert_eq!(set.len(), 11520);
        assert!(all2.iter().all(|c| c.is_symplectic()));
    }

    #[test]
    fn inverse_undoes_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let c = random_clifford(4, &mut rng).unwrap();
            let ci = c.inverse();
            assert_eq!(c.compose(&ci).unwrap(), CliffordTableau::identity(4));
            assert_eq!(ci.compose(&c).unwrap(), CliffordTableau::identity(4));
        }
    }

    #[test]
    fn dense_synthesis_identity() {
        let u = CliffordTableau::identity(3).to_dense().unwrap();
        assert!(u.phase_insensitive_diff(&DenseOperator::identity(&[2, 2, 2])) < 1e-12);
    }

    #[test]
    fn tableau_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let c = random_clifford(3, &mut rng).unwrap();
        assert_eq!(CliffordTableau::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn seeded_sampler_is_deterministic() {
        let a = random_clifford(5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = random_clifford(5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }
}
