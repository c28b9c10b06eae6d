//! Dense matrix exponential: scaling-and-squaring with diagonal Padé
//! approximants, plus an eigendecomposition fast path for normal matrices
//! (diagonalized through the real Schur form, whose blocks exponentiate in
//! closed form).

use nalgebra::DMatrix;

// Order-selection thresholds for the [m/m] diagonal Padé approximants.
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `e^(tA)`.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    assert_eq!(a.nrows(), a.ncols(), "matrix exponential needs a square matrix");
    expm(&(a * t))
}

/// `e^M`.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return m.clone();
    }
    if is_normal(m) {
        if let Some(result) = expm_normal(m) {
            return result;
        }
    }
    expm_pade(m)
}

/// Normality test: `||M Mᵀ - Mᵀ M||_F <= 1e-12 ||M||_F²`.
fn is_normal(m: &DMatrix<f64>) -> bool {
    let commutator = m * m.transpose() - m.transpose() * m;
    let scale = m.norm(); // Frobenius
    commutator.norm() <= 1e-12 * scale * scale
}

/// Exponential of a normal matrix through the real Schur form. For a normal
/// matrix the quasi-triangular factor is block-diagonal with 1x1 and 2x2
/// rotation-scaling blocks, each with a closed-form exponential. Returns
/// `None` when the computed factor is not block-diagonal to roundoff (then
/// the caller falls back to Padé).
fn expm_normal(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let schur = m.clone().try_schur(1e-14, 10_000)?;
    let (q, t) = schur.unpack();
    let tol = 1e-12 * (m.norm() + 1.0);

    let mut exp_t = DMatrix::zeros(n, n);
    let mut i = 0;
    while i < n {
        let two_by_two = i + 1 < n && t[(i + 1, i)].abs() > tol;
        if two_by_two {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let block = exp_2x2(a, b, c, d);
            exp_t[(i, i)] = block[0];
            exp_t[(i, i + 1)] = block[1];
            exp_t[(i + 1, i)] = block[2];
            exp_t[(i + 1, i + 1)] = block[3];
            i += 2;
        } else {
            exp_t[(i, i)] = t[(i, i)].exp();
            i += 1;
        }
    }

    // Verify quasi-diagonal structure: everything outside the blocks ~ 0.
    let mut j = 0;
    let mut block_end = vec![0usize; n];
    while j < n {
        let two = j + 1 < n && t[(j + 1, j)].abs() > tol;
        let end = if two { j + 1 } else { j };
        block_end[j] = end;
        if two {
            block_end[j + 1] = end;
        }
        j = end + 1;
    }
    for r in 0..n {
        for c in (block_end[r] + 1)..n {
            if t[(r, c)].abs() > tol {
                return None;
            }
        }
    }

    Some(&q * exp_t * q.transpose())
}

/// Closed-form exponential of `[[a, b], [c, d]]`.
fn exp_2x2(a: f64, b: f64, c: f64, d: f64) -> [f64; 4] {
    let mean = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let disc = half_diff * half_diff + b * c;
    let scale = mean.exp();
    // cosh/sinhc of sqrt(disc), continued through disc < 0 as cos/sinc.
    let (ch, shc) = if disc >= 0.0 {
        let delta = disc.sqrt();
        if delta < 1e-8 {
            (1.0 + disc / 2.0, 1.0 + disc / 6.0)
        } else {
            (delta.cosh(), delta.sinh() / delta)
        }
    } else {
        let omega = (-disc).sqrt();
        if omega < 1e-8 {
            (1.0 + disc / 2.0, 1.0 + disc / 6.0)
        } else {
            (omega.cos(), omega.sin() / omega)
        }
    };
    [
        scale * (ch + shc * half_diff),
        scale * shc * b,
        scale * shc * c,
        scale * (ch - shc * half_diff),
    ]
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade_uv(m: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let id = DMatrix::identity(n, n);
    let m2 = m * m;
    // powers[k] = M^(2k)
    let mut powers = vec![id.clone(), m2.clone()];
    let half = b.len() / 2; // number of even coefficients beyond b0
    for _ in 2..half {
        let next = powers.last().unwrap() * &m2;
        powers.push(next);
    }
    let mut u_inner = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u_inner += p * b[2 * k + 1];
        v += p * b[2 * k];
    }
    (m * u_inner, v)
}

fn pade_13_uv(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let id = DMatrix::identity(n, n);
    let m2 = m * m;
    let m4 = &m2 * &m2;
    let m6 = &m4 * &m2;
    let b = &B13;
    let u_high = &m6 * (&m6 * b[13] + &m4 * b[11] + &m2 * b[9]);
    let u_low = &m6 * b[7] + &m4 * b[5] + &m2 * b[3] + &id * b[1];
    let u = m * (u_high + u_low);
    let v_high = &m6 * (&m6 * b[12] + &m4 * b[10] + &m2 * b[8]);
    let v = v_high + &m6 * b[6] + &m4 * b[4] + &m2 * b[2] + &id * b[0];
    (u, v)
}

fn expm_pade(m: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = one_norm(m);
    let (u, v, squarings) = if norm <= THETA_9 {
        let b: &[f64] = if norm <= THETA_3 {
            &B3
        } else if norm <= THETA_5 {
            &B5
        } else if norm <= THETA_7 {
            &B7
        } else {
            &B9
        };
        let (u, v) = pade_uv(m, b);
        (u, v, 0u32)
    } else {
        let squarings = ((norm / THETA_13).log2().ceil()).max(0.0) as u32;
        let scaled = m / 2f64.powi(squarings as i32);
        let (u, v) = pade_13_uv(&scaled);
        (u, v, squarings)
    };

    let numer = &u + &v;
    let denom = &v - &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .expect("Pade denominator is nonsingular for scaled inputs");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
