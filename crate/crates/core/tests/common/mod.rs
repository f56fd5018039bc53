//! Test-only oracles, independent of the library's solver path.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeSet;

use ghz_holism::probspace::{atom_sign, mask_of, MomentConstraint, Rational};
use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

type Q = Ratio<i128>;

fn to_q(r: &Rational) -> Q {
    let n: i128 = r.numer().try_into().expect("small numerator");
    let d: i128 = r.denom().try_into().expect("small denominator");
    Q::new(n, d)
}

pub fn to_big(q: &Q) -> Rational {
    Rational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

/// Solves `A_S y = b` by exact elimination; `None` unless the columns are
/// independent and the system is consistent.
fn solve_columns(rows: &[Vec<Q>], rhs: &[Q], cols: &[usize]) -> Option<Vec<Q>> {
    let k = cols.len();
    let mut m: Vec<Vec<Q>> = rows
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r: Vec<Q> = cols.iter().map(|&c| row[c]).collect();
            r.push(*b);
            r
        })
        .collect();
    for (pivot_row, col) in (0..k).enumerate() {
        let p = (pivot_row..m.len()).find(|&i| !m[i][col].is_zero())?;
        m.swap(pivot_row, p);
        let inv = m[pivot_row][col].recip();
        for v in m[pivot_row].iter_mut() {
            *v *= inv;
        }
        for i in 0..m.len() {
            if i != pivot_row && !m[i][col].is_zero() {
                let f = m[i][col];
                for j in 0..=k {
                    let d = f * m[pivot_row][j];
                    m[i][j] -= d;
                }
            }
        }
    }
    if m[k..].iter().any(|r| !r[k].is_zero()) {
        return None;
    }
    Some((0..k).map(|i| m[i][k]).collect())
}

fn rank(rows: &[Vec<Q>]) -> usize {
    let mut m = rows.to_vec();
    let width = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for col in 0..width {
        let Some(p) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(r, p);
        for i in r + 1..m.len() {
            if !m[i][col].is_zero() {
                let f = m[i][col] / m[r][col];
                for j in col..width {
                    let d = f * m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        r += 1;
    }
    r
}

fn combinations(n: usize, k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == k {
        out.push(current.clone());
        return;
    }
    for i in start..n {
        if n - i < k - current.len() {
            break;
        }
        current.push(i);
        combinations(n, k, i + 1, current, out);
        current.pop();
    }
}

/// All distinct vertices of `{p >= 0, sum p = 1, E_S(p) = target_S}` by
/// enumerating every basis of the constraint matrix.
pub fn enumerate_vertices(n: usize, constraints: &[MomentConstraint]) -> Vec<Vec<Rational>> {
    let atoms = 1usize << n;
    let mut rows: Vec<Vec<Q>> = vec![vec![Q::one(); atoms]];
    let mut rhs: Vec<Q> = vec![Q::one()];
    for c in constraints {
        let mask = mask_of(n, c.subset()).expect("valid subset");
        rows.push((0..atoms).map(|a| Q::from_integer(atom_sign(a, mask) as i128)).collect());
        rhs.push(to_q(c.target()));
    }
    let r = rank(&rows);
    let mut subsets = Vec::new();
    combinations(atoms, r, 0, &mut Vec::new(), &mut subsets);
    let mut vertices = BTreeSet::new();
    for cols in subsets {
        let Some(y) = solve_columns(&rows, &rhs, &cols) else { continue };
        if y.iter().any(|v| v.is_negative()) {
            continue;
        }
        let mut x = vec![Q::zero(); atoms];
        for (&c, v) in cols.iter().zip(&y) {
            x[c] = *v;
        }
        vertices.insert(x);
    }
    vertices.into_iter().map(|x| x.iter().map(to_big).collect()).collect()
}

/// Explicit `2^n x 2^n` matrix of a Pauli string as a Kronecker product,
/// qubit 1 being the least significant index bit.
pub fn pauli_matrix(p: &ghz_holism::pauli::PauliString) -> Vec<Vec<num_complex::Complex64>> {
    use ghz_holism::pauli::Pauli;
    use num_complex::Complex64 as C;
    let single = |l: Pauli| -> [[C; 2]; 2] {
        let (o, z, i) = (C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 1.0));
        match l {
            Pauli::I => [[o, z], [z, o]],
            Pauli::X => [[z, o], [o, z]],
            Pauli::Y => [[z, -i], [i, z]],
            Pauli::Z => [[o, z], [z, -o]],
        }
    };
    let mut m = vec![vec![C::new(1.0, 0.0)]];
    // Build from the most significant qubit down so qubit 1 ends up in bit 0.
    for &letter in p.letters().iter().rev() {
        let s = single(letter);
        let d = m.len();
        let mut next = vec![vec![C::new(0.0, 0.0); 2 * d]; 2 * d];
        for (r, row) in m.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        next[2 * r + a][2 * c + b] = v * s[a][b];
                    }
                }
            }
        }
        m = next;
    }
    let (re, im) = p.phase().to_complex();
    let phase = C::new(re, im);
    m.into_iter().map(|row| row.into_iter().map(|v| v * phase).collect()).collect()
}
