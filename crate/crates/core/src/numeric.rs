//! Small numeric helpers shared across modules.

/// Running sum with an error-free (TwoSum) compensation term.
///
/// The result is accurate to a few ulps of the exact sum, which makes it
/// effectively independent of the order in which terms are added.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let s = self.sum + value;
        let bb = s - self.sum;
        self.compensation += (self.sum - (s - bb)) + (value - bb);
        self.sum = s;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sums of `a` and of `a[i] * b[i]`, accumulated in four
/// independent lanes so the loop vectorizes.
pub fn compensated_sum_and_dot(a: &[f64], b: &[f64]) -> (f64, f64) {
    debug_assert_eq!(a.len(), b.len());
    let mut s = [0.0f64; 4];
    let mut cs = [0.0f64; 4];
    let mut p = [0.0f64; 4];
    let mut cp = [0.0f64; 4];
    let mut ac = a.chunks_exact(4);
    let mut bc = b.chunks_exact(4);
    for (x, y) in (&mut ac).zip(&mut bc) {
        for k in 0..4 {
            let v = x[k];
            let t = s[k] + v;
            let bb = t - s[k];
            cs[k] += (s[k] - (t - bb)) + (v - bb);
            s[k] = t;

            let v = x[k] * y[k];
            let t = p[k] + v;
            let bb = t - p[k];
            cp[k] += (p[k] - (t - bb)) + (v - bb);
            p[k] = t;
        }
    }
    let mut total = CompensatedSum::new();
    let mut dot = CompensatedSum::new();
    for k in 0..4 {
        total.add(s[k]);
        dot.add(p[k]);
    }
    for (x, y) in ac.remainder().iter().zip(bc.remainder()) {
        total.add(*x);
        dot.add(x * y);
    }
    let comp_s: f64 = (cs[0] + cs[1]) + (cs[2] + cs[3]);
    let comp_p: f64 = (cp[0] + cp[1]) + (cp[2] + cp[3]);
    (total.value() + comp_s, dot.value() + comp_p)
}

/// Maximum of a slice, ignoring NaN handling so the loop vectorizes.
pub fn lane_max(values: &[f64]) -> f64 {
    let mut m = [f64::NEG_INFINITY; 4];
    let mut chunks = values.chunks_exact(4);
    for c in &mut chunks {
        for k in 0..4 {
            m[k] = if c[k] > m[k] { c[k] } else { m[k] };
        }
    }
    let mut out = m[0].max(m[1]).max(m[2].max(m[3]));
    for &v in chunks.remainder() {
        out = out.max(v);
    }
    out
}

const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52

/// `exp(x)` for `x <= 0`, branch-free so that it vectorizes.
///
/// Arguments below -708 (including -inf) return 0; the result is within a
/// few ulps of `f64::exp` elsewhere.
#[inline(always)]
pub fn exp_nonpositive(x: f64) -> f64 {
    let xc = if x < -708.0 { -708.0 } else { x };
    let t = xc * std::f64::consts::LOG2_E + ROUND_MAGIC;
    let k = t - ROUND_MAGIC;
    let ki = (t.to_bits() as i64).wrapping_sub(ROUND_MAGIC.to_bits() as i64);
    let r = (xc - k * LN2_HI) - k * LN2_LO;
    // Taylor series of exp(r) on |r| <= ln(2)/2 through r^13
    let mut p = 1.0 / 6_227_020_800.0;
    p = p * r + 1.0 / 479_001_600.0;
    p = p * r + 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    let scale = f64::from_bits(((ki + 1023) as u64) << 52);
    if x < -708.0 {
        0.0
    } else {
        p * scale
    }
}

/// Replaces every `v` with `exp(v - shift)`; requires `v <= shift`.
pub fn exp_shifted_in_place(values: &mut [f64], shift: f64) {
    for v in values.iter_mut() {
        *v = exp_nonpositive(*v - shift);
    }
}

/// Compensated sum of a sequence.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss = compensated_sum(values.iter().map(|v| (v - m) * (v - m)));
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Pearson correlation. Returns 0 when either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let ma = mean(a);
    let mb = mean(b);
    let mut sab = CompensatedSum::new();
    let mut saa = CompensatedSum::new();
    let mut sbb = CompensatedSum::new();
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab.add(dx * dy);
        saa.add(dx * dx);
        sbb.add(dy * dy);
    }
    let denom = (saa.value() * sbb.value()).sqrt();
    if denom == 0.0 || !denom.is_finite() {
        return 0.0;
    }
    (sab.value() / denom).clamp(-1.0, 1.0)
}

/// Derives an independent 64-bit seed for item `index` of stream `stream`
/// (SplitMix64 finalizer over the combined words).
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)
        ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean with a normal-approximation 95% interval, `mean +- 1.96 s / sqrt(k)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl MeanCi {
    pub fn from_samples(values: &[f64]) -> Self {
        let m = mean(values);
        let half = if values.len() < 2 {
            0.0
        } else {
            1.96 * sample_std(values) / (values.len() as f64).sqrt()
        };
        Self {
            mean: m,
            ci_low: m - half,
            ci_high: m + half,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}
