use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Matrix;

const CHECKPOINT_MAGIC: &str = "SEQHYGAN-PARAMS v1";

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    name: String,
    value: Matrix,
    first_moment: Matrix,
    second_moment: Matrix,
}

/// Named parameters with Adam moment accumulators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    entries: Vec<Entry>,
    step: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    /// L2 coefficient added to the gradient (`g + weight_decay * p`).
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        AdamConfig {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a parameter with zeroed moments. Names must be unique.
    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) -> Result<()> {
        let name = name.into();
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::InvalidArgument(format!("duplicate parameter `{name}`")));
        }
        let (r, c) = value.shape();
        self.entries.push(Entry {
            name,
            value,
            first_moment: Matrix::zeros(r, c),
            second_moment: Matrix::zeros(r, c),
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.entries.iter().find(|e| e.name == name).map(|e| &e.value)
    }

    pub fn value(&self, index: usize) -> &Matrix {
        &self.entries[index].value
    }

    pub fn value_mut(&mut self, index: usize) -> &mut Matrix {
        &mut self.entries[index].value
    }

    pub fn name(&self, index: usize) -> &str {
        &self.entries[index].name
    }

    pub fn values(&self) -> impl Iterator<Item = &Matrix> {
        self.entries.iter().map(|e| &e.value)
    }

    /// One Adam update with bias correction. `grads` are in parameter order.
    pub fn adam_step(&mut self, grads: &[Matrix], cfg: &AdamConfig) -> Result<()> {
        if !(cfg.lr > 0.0) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", cfg.lr)));
        }
        if grads.len() != self.entries.len() {
            return Err(Error::InvalidArgument(format!(
                "{} gradients for {} parameters",
                grads.len(),
                self.entries.len()
            )));
        }
        for (e, g) in self.entries.iter().zip(grads) {
            if g.shape() != e.value.shape() {
                return Err(Error::ShapeMismatch {
                    op: "adam_step",
                    left: "gradient",
                    left_shape: g.shape(),
                    right: "parameter",
                    right_shape: e.value.shape(),
                });
            }
            if !g.is_finite() {
                return Err(Error::NonFinite { op: "adam_step" });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for (e, g) in self.entries.iter_mut().zip(grads) {
            let p = e.value.as_mut_slice();
            let m = e.first_moment.as_mut_slice();
            let v = e.second_moment.as_mut_slice();
            for i in 0..p.len() {
                let gi = g.as_slice()[i] + cfg.weight_decay * p[i];
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }

    /// Copies parameter values (not moments) from `other`, which must have the same layout.
    pub fn copy_values_from(&mut self, other: &ParamStore) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            debug_assert_eq!(a.name, b.name);
            a.value = b.value.clone();
        }
    }

    /// Writes a text header (`name rows cols` per parameter) followed by the
    /// values as raw little-endian `f64`, parameter by parameter, row-major.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let mut header = format!("{CHECKPOINT_MAGIC}\n{}\n", self.entries.len());
        for e in &self.entries {
            header.push_str(&format!("{} {} {}\n", e.name, e.value.rows(), e.value.cols()));
        }
        let mut out = header.into_bytes();
        for e in &self.entries {
            for v in e.value.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_reader(BufReader::new(file)).map_err(|message| Error::Parse {
            path: path.into(),
            row: 0,
            message,
        })
    }

    pub fn from_checkpoint_reader<R: BufRead>(mut reader: R) -> std::result::Result<Self, String> {
        let mut line = String::new();
        let mut next_line = |reader: &mut R| -> std::result::Result<String, String> {
            line.clear();
            reader.read_line(&mut line).map_err(|e| e.to_string())?;
            Ok(line.trim_end_matches('\n').to_string())
        };
        if next_line(&mut reader)? != CHECKPOINT_MAGIC {
            return Err("not a parameter checkpoint".into());
        }
        let count: usize = next_line(&mut reader)?.parse().map_err(|e| format!("bad count: {e}"))?;
        let mut shapes = Vec::with_capacity(count);
        for _ in 0..count {
            let l = next_line(&mut reader)?;
            let parts: Vec<&str> = l.split(' ').collect();
            if parts.len() != 3 {
                return Err(format!("bad header line `{l}`"));
            }
            let rows: usize = parts[1].parse().map_err(|e| format!("bad rows: {e}"))?;
            let cols: usize = parts[2].parse().map_err(|e| format!("bad cols: {e}"))?;
            shapes.push((parts[0].to_string(), rows, cols));
        }
        let mut store = ParamStore::new();
        for (name, rows, cols) in shapes {
            let mut buf = vec![0u8; rows * cols * 8];
            reader.read_exact(&mut buf).map_err(|e| format!("truncated payload for `{name}`: {e}"))?;
            let data = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            store
                .insert(name, Matrix::from_vec(rows, cols, data).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        }
        let mut rest = Vec::new();
        reader.read_to_end(&mut rest).map_err(|e| e.to_string())?;
        if !rest.is_empty() {
            return Err(format!("{} trailing bytes", rest.len()));
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(v: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert("p", Matrix::scalar(v)).unwrap();
        s
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = scalar_store(0.37);
        s.adam_step(&[Matrix::scalar(0.0)], &AdamConfig::new(0.1, 0.0)).unwrap();
        assert_eq!(s.value(0).get(0, 0), 0.37);
        assert_eq!(s.step(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = v_hat = 1 after bias correction, so p -= 0.1 / (1 + 1e-8)
        let mut s = scalar_store(1.0);
        s.adam_step(&[Matrix::scalar(1.0)], &AdamConfig::new(0.1, 0.0)).unwrap();
        let expected = 1.0 - 0.1 / (1.0 + 1e-8);
        assert!((s.value(0).get(0, 0) - expected).abs() < 1e-15);
        assert!((s.value(0).get(0, 0) - 0.9).abs() < 1e-8);
    }

    #[test]
    fn minimizes_quadratic_bowl() {
        let mut s = ParamStore::new();
        s.insert("p", Matrix::from_rows(&[vec![3.0, -2.0]]).unwrap()).unwrap();
        let cfg = AdamConfig::new(0.05, 0.0);
        for _ in 0..500 {
            let g = s.value(0).map(|p| 2.0 * p);
            s.adam_step(&[g], &cfg).unwrap();
        }
        assert!(s.value(0).as_slice().iter().all(|p| p.abs() < 1e-3), "{:?}", s.value(0));
    }

    #[test]
    fn weight_decay_is_coupled_l2() {
        let mut a = scalar_store(2.0);
        let mut b = scalar_store(2.0);
        a.adam_step(&[Matrix::scalar(0.5)], &AdamConfig::new(0.01, 0.1)).unwrap();
        b.adam_step(&[Matrix::scalar(0.5 + 0.1 * 2.0)], &AdamConfig::new(0.01, 0.0)).unwrap();
        assert_eq!(a.value(0), b.value(0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut s = scalar_store(1.0);
        assert!(s.adam_step(&[Matrix::scalar(1.0)], &AdamConfig::new(0.0, 0.0)).is_err());
        assert!(s.adam_step(&[Matrix::scalar(f64::NAN)], &AdamConfig::new(0.1, 0.0)).is_err());
        assert!(s.adam_step(&[], &AdamConfig::new(0.1, 0.0)).is_err());
        assert!(s.insert("p", Matrix::scalar(0.0)).is_err());
    }

    #[test]
    fn deterministic_updates() {
        let mut rng = crate::seed::rng(5);
        let w = Matrix::glorot(3, 4, &mut rng);
        let g = Matrix::glorot(3, 4, &mut rng);
        let mut a = ParamStore::new();
        a.insert("w", w).unwrap();
        let mut b = a.clone();
        let cfg = AdamConfig::new(0.01, 1e-3);
        for _ in 0..5 {
            a.adam_step(std::slice::from_ref(&g), &cfg).unwrap();
            b.adam_step(std::slice::from_ref(&g), &cfg).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let mut rng = crate::seed::rng(11);
        let mut s = ParamStore::new();
        s.insert("W1", Matrix::glorot(4, 7, &mut rng)).unwrap();
        s.insert("Wc", Matrix::glorot(2, 4, &mut rng)).unwrap();
        s.insert("empty", Matrix::zeros(0, 3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ckpt.bin");
        s.save(&p).unwrap();
        let back = ParamStore::load(&p).unwrap();
        assert_eq!(back.names().collect::<Vec<_>>(), ["W1", "Wc", "empty"]);
        for i in 0..s.len() {
            assert_eq!(back.value(i), s.value(i));
        }
        let bytes = fs::read(&p).unwrap();
        assert!(bytes.starts_with(b"SEQHYGAN-PARAMS v1\n3\nW1 4 7\nWc 2 4\nempty 0 3\n"));
        assert!(ParamStore::from_checkpoint_reader(&bytes[..bytes.len() - 1]).is_err());
    }
}
