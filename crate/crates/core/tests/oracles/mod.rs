//! Literal re-implementations of the library's formulas, written for clarity
//! rather than speed. Grids are flat `B x H x W` row-major buffers.

#![allow(dead_code)]

/// `E(l, m, n) = sum_i p_i * max(0, 1 - |l - t*_i|)` over every event and bin.
pub fn voxel(events: &[(f64, usize, usize, f64)], t0: f64, duration: f64, b: usize, h: usize, w: usize) -> Vec<f64> {
    let mut e = vec![0.0; b * h * w];
    for &(t, x, y, p) in events {
        let ts = if duration > 0.0 && b > 1 { (b - 1) as f64 / duration * (t - t0) } else { 0.0 };
        // t0 <= t <= t0 + duration bounds t* to [0, B - 1]; rounding can
        // overshoot the upper end by an ulp.
        let ts = ts.clamp(0.0, (b.max(1) - 1) as f64);
        for l in 0..b {
            let k = 1.0 - (l as f64 - ts).abs();
            if k > 0.0 {
                e[(l * h + y) * w + x] += p * k;
            }
        }
    }
    e
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

/// Median over `[l - kt, l + kt]` clipped to the grid.
pub fn temporal_median(e: &[f64], b: usize, h: usize, w: usize, kt: usize) -> Vec<f64> {
    let mut out = vec![0.0; e.len()];
    for l in 0..b {
        for m in 0..h {
            for n in 0..w {
                let window: Vec<f64> = (0..b)
                    .filter(|&i| i + kt >= l && i <= l + kt)
                    .map(|i| e[(i * h + m) * w + n])
                    .collect();
                out[(l * h + m) * w + n] = median(window);
            }
        }
    }
    out
}

/// Reflection about the first (row-major) largest `|E|` of the clipped
/// spatial window; reflections leaving the frame keep the original value.
pub fn max_reflection(e: &[f64], b: usize, h: usize, w: usize, ks: usize) -> Vec<f64> {
    let at = |l: usize, m: i64, n: i64| e[(l * h + m as usize) * w + n as usize];
    let mut out = vec![0.0; e.len()];
    for l in 0..b {
        for m in 0..h as i64 {
            for n in 0..w as i64 {
                let mut best: Option<(i64, i64, f64)> = None;
                for r in (m - ks as i64)..=(m + ks as i64) {
                    for c in (n - ks as i64)..=(n + ks as i64) {
                        if r < 0 || c < 0 || r >= h as i64 || c >= w as i64 {
                            continue;
                        }
                        let v = at(l, r, c).abs();
                        if best.is_none_or(|(_, _, bv)| v > bv) {
                            best = Some((r, c, v));
                        }
                    }
                }
                let (r, c, _) = best.unwrap();
                let (rm, rn) = (2 * r - m, 2 * c - n);
                let inside = rm >= 0 && rn >= 0 && rm < h as i64 && rn < w as i64;
                out[(l * h + m as usize) * w + n as usize] = if inside { at(l, rm, rn) } else { at(l, m, n) };
            }
        }
    }
    out
}

/// `sum_l |E(l, m, n)| > mean + std` with the population deviation.
pub fn mask(e: &[f64], b: usize, h: usize, w: usize) -> Vec<bool> {
    let mut sums = vec![0.0; h * w];
    for l in 0..b {
        for p in 0..h * w {
            sums[p] += e[l * h * w + p].abs();
        }
    }
    let count = (h * w) as f64;
    let mu = sums.iter().sum::<f64>() / count;
    let sigma = (sums.iter().map(|s| (s - mu) * (s - mu)).sum::<f64>() / count).sqrt();
    sums.iter().map(|&s| s > mu + sigma).collect()
}

/// `U * (E_med + E_max) / 2 + (1 - U) * E`.
pub fn blend(e: &[f64], med: &[f64], max: &[f64], u: &[bool]) -> Vec<f64> {
    let plane = u.len();
    (0..e.len())
        .map(|i| {
            let u = if u[i % plane] { 1.0 } else { 0.0 };
            u * ((med[i] + max[i]) / 2.0) + (1.0 - u) * e[i]
        })
        .collect()
}

pub fn mae(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]).abs();
    }
    s / a.len() as f64
}

pub fn psnr(a: &[f64], b: &[f64], max: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    10.0 * (max * max / (s / a.len() as f64)).log10()
}

/// Mean SSIM over every `n x n` window, each window's statistics computed
/// directly with two passes.
pub fn ssim(a: &[f64], b: &[f64], h: usize, w: usize, n: usize, c1: f64, c2: f64, scale: f64) -> f64 {
    let mut total = 0.0;
    let mut windows = 0.0;
    let cnt = (n * n) as f64;
    for r in 0..=h - n {
        for c in 0..=w - n {
            let (mut mx, mut my) = (0.0, 0.0);
            for i in r..r + n {
                for j in c..c + n {
                    mx += a[i * w + j] * scale;
                    my += b[i * w + j] * scale;
                }
            }
            mx /= cnt;
            my /= cnt;
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for i in r..r + n {
                for j in c..c + n {
                    let dx = a[i * w + j] * scale - mx;
                    let dy = b[i * w + j] * scale - my;
                    vx += dx * dx;
                    vy += dy * dy;
                    cov += dx * dy;
                }
            }
            vx /= cnt;
            vy /= cnt;
            cov /= cnt;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            windows += 1.0;
        }
    }
    total / windows
}

/// Rotation angle in degrees between two rotation matrices (row-major),
/// through the unit quaternion of `A^T B`.
pub fn quaternion_angle_deg(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[k][i] * b[k][j]).sum();
        }
    }
    let tr = m[0][0] + m[1][1] + m[2][2];
    // Shepperd: pick the largest of 4w^2, 4x^2, 4y^2, 4z^2.
    let cands = [1.0 + tr, 1.0 + 2.0 * m[0][0] - tr, 1.0 + 2.0 * m[1][1] - tr, 1.0 + 2.0 * m[2][2] - tr];
    let k = (0..4).max_by(|&i, &j| cands[i].partial_cmp(&cands[j]).unwrap()).unwrap();
    let s = cands[k].sqrt() * 2.0;
    let q = match k {
        0 => [s / 4.0, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s],
        1 => [(m[2][1] - m[1][2]) / s, s / 4.0, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s],
        2 => [(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, s / 4.0, (m[1][2] + m[2][1]) / s],
        _ => [(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, s / 4.0],
    };
    let v = (q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    (2.0 * v.atan2(q[0].abs())).to_degrees()
}

/// Indices of the `k` smallest distances, ties broken by index, by full sort.
pub fn topk(distances: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..distances.len()).collect();
    idx.sort_by(|&a, &b| distances[a].partial_cmp(&distances[b]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Median with the mean of the central pair for even counts.
pub fn median_of(values: &[f64]) -> f64 {
    median(values.to_vec())
}
