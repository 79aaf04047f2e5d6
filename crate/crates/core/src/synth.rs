//! Deterministic synthetic imagery for tests and benchmarks.
//!
//! Frames are sampled from analytic band-limited functions, so a shifted
//! pair carries an exactly known ground-truth flow with no interpolation
//! error, and the same seed always reproduces the same data.

use crate::grid::{Field, Grid};

/// SplitMix64; good enough for test imagery and stable across platforms.
#[derive(Debug, Clone)]
pub struct Rng64 {
    state: u64,
}

impl Rng64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// A sum of random sinusoids; smooth, textured everywhere, and cheap to
/// evaluate at arbitrary real coordinates.
#[derive(Debug, Clone)]
pub struct WaveImage {
    waves: Vec<(f64, f64, f64, f64)>, // (kx, ky, phase, amplitude)
    offset: f64,
}

impl WaveImage {
    pub fn new(seed: u64) -> Self {
        let mut rng = Rng64::new(seed);
        let mut waves = Vec::with_capacity(24);
        for _ in 0..24 {
            let wavelength = rng.range(8.0, 40.0);
            let dir = rng.range(0.0, std::f64::consts::TAU);
            let k = std::f64::consts::TAU / wavelength;
            waves.push((
                k * dir.cos(),
                k * dir.sin(),
                rng.range(0.0, std::f64::consts::TAU),
                rng.range(4.0, 18.0),
            ));
        }
        Self {
            waves,
            offset: 128.0,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut v = self.offset;
        for &(kx, ky, phase, amp) in &self.waves {
            v += amp * (kx * x + ky * y + phase).sin();
        }
        v
    }

    pub fn sample(&self, width: usize, height: usize) -> Grid {
        Grid::from_fn(width, height, |x, y| self.eval(x as f64, y as f64))
    }

    /// Sample with the scene translated so that `i1(x + shift) = i0(x)`,
    /// i.e. the true flow from frame 0 to frame 1 is `shift`.
    pub fn sample_shifted(&self, width: usize, height: usize, shift: (f64, f64)) -> Grid {
        Grid::from_fn(width, height, |x, y| {
            self.eval(x as f64 - shift.0, y as f64 - shift.1)
        })
    }
}

/// A frame pair with exactly known constant ground-truth flow.
#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub i0: Grid,
    pub i1: Grid,
    pub ground_truth: Field,
}

pub fn shifted_pair(width: usize, height: usize, shift: (f64, f64), seed: u64) -> SyntheticPair {
    let wave = WaveImage::new(seed);
    SyntheticPair {
        i0: wave.sample(width, height),
        i1: wave.sample_shifted(width, height, shift),
        ground_truth: Field::constant(width, height, shift.0, shift.1),
    }
}

/// A pair whose left and right halves move differently (piecewise-constant
/// motion with a discontinuity down the middle). The two halves come from
/// independent textures so each half genuinely carries its own motion.
pub fn piecewise_pair(
    width: usize,
    height: usize,
    left_shift: (f64, f64),
    right_shift: (f64, f64),
    seed: u64,
) -> SyntheticPair {
    let wave_l = WaveImage::new(seed);
    let wave_r = WaveImage::new(seed ^ 0xabcd_ef01_2345_6789);
    let split = width / 2;
    let pick = |x: usize| if x < split { (&wave_l, left_shift) } else { (&wave_r, right_shift) };
    let i0 = Grid::from_fn(width, height, |x, y| pick(x).0.eval(x as f64, y as f64));
    let i1 = Grid::from_fn(width, height, |x, y| {
        let (wave, shift) = pick(x);
        wave.eval(x as f64 - shift.0, y as f64 - shift.1)
    });
    let gt = Field::new(
        Grid::from_fn(width, height, |x, _| pick(x).1 .0),
        Grid::from_fn(width, height, |x, _| pick(x).1 .1),
    );
    SyntheticPair {
        i0,
        i1,
        ground_truth: gt,
    }
}
