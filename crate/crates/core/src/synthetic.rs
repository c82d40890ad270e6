//! Synthetic face-like identification data: each subject is a random
//! band-limited pattern, probes are shifted noisy re-renderings of it.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::pipeline::imageio::{to_bytes, write_pgm};
use crate::{Plane, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFaces {
    pub subjects: usize,
    /// Square image side in pixels.
    pub size: usize,
    /// Gaussian noise standard deviation on the `[0, 255]` scale.
    pub noise_sigma: f64,
    /// Probe displacement in pixels.
    pub shift: isize,
    /// Highest spatial frequency (cycles per image) of a pattern component.
    pub max_frequency: usize,
    pub components: usize,
    pub seed: u64,
}

impl Default for SyntheticFaces {
    fn default() -> Self {
        Self {
            subjects: 20,
            size: 64,
            noise_sigma: 10.0,
            shift: 2,
            max_frequency: 12,
            components: 24,
            seed: 0x0dc7_2016,
        }
    }
}

#[derive(Debug, Clone)]
struct Wave {
    fy: f64,
    fx: f64,
    amplitude: f64,
    phase: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset<T> {
    pub gallery: Vec<(u32, Plane<T>)>,
    /// `(group, subject, image)`.
    pub probes: Vec<(String, u32, Plane<T>)>,
}

impl SyntheticFaces {
    /// Probe groups as `(label, row shift, column shift)`.
    pub fn probe_groups(&self) -> [(&'static str, isize, isize); 4] {
        let s = self.shift;
        [
            ("shift-right", 0, s),
            ("shift-left", 0, -s),
            ("shift-down", s, 0),
            ("shift-up", -s, 0),
        ]
    }

    fn waves(&self, subject: usize) -> Vec<Wave> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (subject as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let max = self.max_frequency as i64;
        // Amplitudes sum to at most 110, keeping every pixel inside [18, 238].
        let budget = 110.0 / self.components as f64;
        (0..self.components)
            .map(|_| {
                let (fy, fx) = loop {
                    let fy = rng.random_range(0..=max);
                    let fx = rng.random_range(-max..=max);
                    if fy != 0 || fx != 0 {
                        break (fy as f64, fx as f64);
                    }
                };
                Wave {
                    fy,
                    fx,
                    amplitude: budget * rng.random_range(0.5..1.0),
                    phase: rng.random_range(0.0..TAU),
                }
            })
            .collect()
    }

    /// Noise-free pattern of `subject`, content displaced by `(dy, dx)`.
    pub fn render<T: Scalar>(&self, subject: usize, dy: isize, dx: isize) -> Plane<T> {
        let waves = self.waves(subject);
        let n = self.size as f64;
        Plane::from_fn(self.size, self.size, |r, c| {
            let y = r as f64 - dy as f64;
            let x = c as f64 - dx as f64;
            let v = waves
                .iter()
                .map(|w| w.amplitude * (TAU * (w.fy * y + w.fx * x) / n + w.phase).cos())
                .sum::<f64>();
            T::lit(128.0 + v)
        })
    }

    /// Clean gallery images (one per subject) and noisy shifted probes
    /// (one per subject and probe group).
    pub fn generate<T: Scalar>(&self) -> SyntheticDataset<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(1));
        let noise = Normal::new(0.0, self.noise_sigma).expect("finite sigma");
        let gallery = (0..self.subjects).map(|s| (s as u32, self.render(s, 0, 0))).collect();
        let mut probes = Vec::with_capacity(self.subjects * 4);
        for (label, dy, dx) in self.probe_groups() {
            for s in 0..self.subjects {
                let clean: Plane<f64> = self.render(s, dy, dx);
                let noisy = clean.map(|v| T::lit((v + noise.sample(&mut rng)).clamp(0.0, 255.0)));
                probes.push((label.to_string(), s as u32, noisy));
            }
        }
        SyntheticDataset { gallery, probes }
    }

    /// Writes the dataset as 8-bit PGMs plus `manifest.csv` into `dir` and
    /// returns the manifest path.
    pub fn write_to_dir(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let data = self.generate::<f64>();
        let mut manifest = String::from("path,subject,role,group\n");
        for (subject, img) in &data.gallery {
            let name = format!("s{subject:03}_gallery.pgm");
            write_pgm(&dir.join(&name), &to_bytes(img))?;
            manifest.push_str(&format!("{name},{subject},gallery,clean\n"));
        }
        for (group, subject, img) in &data.probes {
            let name = format!("s{subject:03}_{group}.pgm");
            write_pgm(&dir.join(&name), &to_bytes(img))?;
            manifest.push_str(&format!("{name},{subject},probe,{group}\n"));
        }
        let path = dir.join("manifest.csv");
        std::fs::write(&path, manifest)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_render_is_translation() {
        let gen = SyntheticFaces::default();
        let base: Plane<f64> = gen.render(3, 0, 0);
        let moved: Plane<f64> = gen.render(3, 2, -2);
        for r in 2..62 {
            for c in 0..60 {
                assert!((moved[(r, c)] - base[(r - 2, c + 2)]).abs() < 1e-9);
            }
        }
        assert!(base.as_slice().iter().all(|&v| (0.0..=255.0).contains(&v)));
    }

    #[test]
    fn generation_is_seeded() {
        let gen = SyntheticFaces {
            subjects: 3,
            ..Default::default()
        };
        let a = gen.generate::<f64>();
        let b = gen.generate::<f64>();
        assert_eq!(a.gallery, b.gallery);
        assert_eq!(a.probes, b.probes);
        assert_eq!(a.probes.len(), 12);
        assert_ne!(a.gallery[0].1, a.gallery[1].1);
    }
}
