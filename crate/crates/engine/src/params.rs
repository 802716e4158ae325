//! Model parameters, gradient containers and binary checkpoints.
//!
//! A model is a stack of message-passing layers followed by an optional
//! dense head. Hidden layers always apply relu; the final map (head if
//! present, otherwise the last layer) applies [`OutputMap`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Gcn,
    Sage,
    Gin,
}

/// Map applied to the final linear output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMap {
    LogSoftmax,
    Identity,
    Relu,
}

/// Weights of one message-passing layer.
///
/// GCN and GraphSAGE use a single matrix (`F_in x F_out` and
/// `2*F_in x F_out` respectively); GIN uses a two-matrix MLP
/// (`F_in x F_out` then `F_out x F_out`).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub mats: Vec<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: Architecture,
    pub layers: Vec<LayerParams>,
    /// Optional dense classifier applied to the top-layer embeddings.
    pub head: Option<Array2<f64>>,
    pub output: OutputMap,
}

fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..limit))
}

impl ModelParams {
    /// Glorot-initialized model. `dims` lists the embedding width after each
    /// message-passing layer; `head_classes` adds a dense classifier on top.
    pub fn new<R: Rng + ?Sized>(
        arch: Architecture,
        input_dim: usize,
        dims: &[usize],
        head_classes: Option<usize>,
        output: OutputMap,
        rng: &mut R,
    ) -> Self {
        assert!(!dims.is_empty(), "need at least one layer");
        assert!(input_dim > 0, "input dimension must be positive");
        assert!(dims.iter().all(|&d| d > 0), "layer widths must be positive");
        let mut layers = Vec::with_capacity(dims.len());
        let mut f_in = input_dim;
        for &f_out in dims {
            let mats = match arch {
                Architecture::Gcn => vec![glorot(f_in, f_out, rng)],
                Architecture::Sage => vec![glorot(2 * f_in, f_out, rng)],
                Architecture::Gin => {
                    vec![glorot(f_in, f_out, rng), glorot(f_out, f_out, rng)]
                }
            };
            layers.push(LayerParams { mats });
            f_in = f_out;
        }
        let head = head_classes.map(|c| {
            assert!(c > 0, "head must have at least one class");
            glorot(f_in, c, rng)
        });
        ModelParams { arch, layers, head, output }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].mats[0].nrows() / if self.arch == Architecture::Sage { 2 } else { 1 }
    }

    /// Width of the embeddings produced by the last message-passing layer.
    pub fn embedding_dim(&self) -> usize {
        self.layers.last().unwrap().mats.last().unwrap().ncols()
    }

    /// Width of the final output (head columns if a head is present).
    pub fn output_dim(&self) -> usize {
        match &self.head {
            Some(h) => h.ncols(),
            None => self.embedding_dim(),
        }
    }

    pub fn param_count(&self) -> usize {
        let body: usize = self
            .layers
            .iter()
            .flat_map(|l| l.mats.iter())
            .map(|m| m.len())
            .sum();
        body + self.head.as_ref().map_or(0, |h| h.len())
    }

    /// Applies `f` to every weight matrix paired with the matching gradient
    /// matrix. Iteration order is fixed: layers in order, mats in order, head.
    pub fn zip_apply<F>(&mut self, grad: &GradientRecord, mut f: F)
    where
        F: FnMut(&mut Array2<f64>, &Array2<f64>),
    {
        assert_eq!(self.layers.len(), grad.layers.len(), "gradient shape mismatch");
        for (lp, lg) in self.layers.iter_mut().zip(grad.layers.iter()) {
            assert_eq!(lp.mats.len(), lg.len(), "gradient shape mismatch");
            for (w, g) in lp.mats.iter_mut().zip(lg.iter()) {
                f(w, g);
            }
        }
        match (&mut self.head, &grad.head) {
            (Some(w), Some(g)) => f(w, g),
            (None, None) => {}
            _ => panic!("gradient head presence mismatch"),
        }
    }
}

/// Gradients with the same shape as the model, plus the loss they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientRecord {
    pub layers: Vec<Vec<Array2<f64>>>,
    pub head: Option<Array2<f64>>,
    pub loss: f64,
}

impl GradientRecord {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|l| l.mats.iter().map(|m| Array2::zeros(m.dim())).collect())
            .collect();
        let head = params.head.as_ref().map(|h| Array2::zeros(h.dim()));
        GradientRecord { layers, head, loss: 0.0 }
    }

    /// `self += s * other`, including the loss field.
    pub fn add_scaled(&mut self, other: &GradientRecord, s: f64) {
        assert_eq!(self.layers.len(), other.layers.len(), "record shape mismatch");
        for (a, b) in self.layers.iter_mut().zip(other.layers.iter()) {
            assert_eq!(a.len(), b.len(), "record shape mismatch");
            for (ma, mb) in a.iter_mut().zip(b.iter()) {
                ma.scaled_add(s, mb);
            }
        }
        match (&mut self.head, &other.head) {
            (Some(a), Some(b)) => a.scaled_add(s, b),
            (None, None) => {}
            _ => panic!("record head presence mismatch"),
        }
        self.loss += s * other.loss;
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            for m in l {
                m.mapv_inplace(|x| x * s);
            }
        }
        if let Some(h) = &mut self.head {
            h.mapv_inplace(|x| x * s);
        }
        self.loss *= s;
    }

    /// Euclidean norm over every entry (head included), fixed summation order.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for l in &self.layers {
            for m in l {
                for &x in m.iter() {
                    acc += x * x;
                }
            }
        }
        if let Some(h) = &self.head {
            for &x in h.iter() {
                acc += x * x;
            }
        }
        acc.sqrt()
    }
}

/// Importance-corrected batch average: `(1/B) * sum_i (1/w_i) * rec_i`.
///
/// With inclusion-probability weights scaled by `m/B` this averages to the
/// full-population mean gradient in expectation, whatever the sampling law.
pub fn estimate_gradient(
    records: &[GradientRecord],
    weights: &[f64],
) -> Result<GradientRecord, EngineError> {
    if records.is_empty() {
        return Err(EngineError::BadEstimate("no records to average".into()));
    }
    if records.len() != weights.len() {
        return Err(EngineError::BadEstimate(format!(
            "{} records but {} weights",
            records.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(EngineError::BadEstimate("weights must be positive".into()));
    }
    let b = records.len() as f64;
    let mut out = records[0].clone();
    out.scale(1.0 / (b * weights[0]));
    for (rec, &w) in records.iter().zip(weights.iter()).skip(1) {
        out.add_scaled(rec, 1.0 / (b * w));
    }
    Ok(out)
}

const CKPT_MAGIC: &[u8; 8] = b"GNNCKPT1";

fn io_err(path: &Path, source: std::io::Error) -> EngineError {
    EngineError::CheckpointIo { path: path.display().to_string(), source }
}

fn fmt_err(path: &Path, msg: impl Into<String>) -> EngineError {
    EngineError::CheckpointFormat { path: path.display().to_string(), msg: msg.into() }
}

fn write_mat<W: Write>(w: &mut W, m: &Array2<f64>) -> std::io::Result<()> {
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for &x in m.iter() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> std::io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_mat<R: Read>(r: &mut R, path: &Path) -> Result<Array2<f64>, EngineError> {
    let rows = u64::from_le_bytes(read_exact::<_, 8>(r).map_err(|e| io_err(path, e))?) as usize;
    let cols = u64::from_le_bytes(read_exact::<_, 8>(r).map_err(|e| io_err(path, e))?) as usize;
    if rows == 0 || cols == 0 || rows.saturating_mul(cols) > (1 << 28) {
        return Err(fmt_err(path, format!("implausible matrix shape {rows}x{cols}")));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(f64::from_le_bytes(
            read_exact::<_, 8>(r).map_err(|e| io_err(path, e))?,
        ));
    }
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| fmt_err(path, format!("matrix shape: {e}")))
}

/// Saves weights plus a free-form provenance string (typically a manifest
/// checksum) in a little-endian binary format.
pub fn save_checkpoint(
    params: &ModelParams,
    manifest_ref: &str,
    path: &Path,
) -> Result<(), EngineError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| -> std::io::Result<()> {
        w.write_all(CKPT_MAGIC)?;
        w.write_all(&[match params.arch {
            Architecture::Gcn => 0u8,
            Architecture::Sage => 1,
            Architecture::Gin => 2,
        }])?;
        w.write_all(&[match params.output {
            OutputMap::LogSoftmax => 0u8,
            OutputMap::Identity => 1,
            OutputMap::Relu => 2,
        }])?;
        w.write_all(&[params.head.is_some() as u8])?;
        let mref = manifest_ref.as_bytes();
        w.write_all(&(mref.len() as u32).to_le_bytes())?;
        w.write_all(mref)?;
        w.write_all(&(params.layers.len() as u32).to_le_bytes())?;
        for layer in &params.layers {
            w.write_all(&(layer.mats.len() as u32).to_le_bytes())?;
            for m in &layer.mats {
                write_mat(&mut w, m)?;
            }
        }
        if let Some(h) = &params.head {
            write_mat(&mut w, h)?;
        }
        w.flush()
    })();
    res.map_err(|e| io_err(path, e))
}

/// Loads a checkpoint written by [`save_checkpoint`], returning the model and
/// the stored provenance string.
pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, String), EngineError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(file);
    let magic = read_exact::<_, 8>(&mut r).map_err(|e| io_err(path, e))?;
    if &magic != CKPT_MAGIC {
        return Err(fmt_err(path, "bad magic bytes"));
    }
    let [arch_b] = read_exact::<_, 1>(&mut r).map_err(|e| io_err(path, e))?;
    let arch = match arch_b {
        0 => Architecture::Gcn,
        1 => Architecture::Sage,
        2 => Architecture::Gin,
        other => return Err(fmt_err(path, format!("unknown architecture tag {other}"))),
    };
    let [out_b] = read_exact::<_, 1>(&mut r).map_err(|e| io_err(path, e))?;
    let output = match out_b {
        0 => OutputMap::LogSoftmax,
        1 => OutputMap::Identity,
        2 => OutputMap::Relu,
        other => return Err(fmt_err(path, format!("unknown output tag {other}"))),
    };
    let [has_head] = read_exact::<_, 1>(&mut r).map_err(|e| io_err(path, e))?;
    if has_head > 1 {
        return Err(fmt_err(path, "head flag must be 0 or 1"));
    }
    let mref_len =
        u32::from_le_bytes(read_exact::<_, 4>(&mut r).map_err(|e| io_err(path, e))?) as usize;
    if mref_len > (1 << 20) {
        return Err(fmt_err(path, "implausible manifest reference length"));
    }
    let mut mref = vec![0u8; mref_len];
    r.read_exact(&mut mref).map_err(|e| io_err(path, e))?;
    let manifest_ref = String::from_utf8(mref)
        .map_err(|_| fmt_err(path, "manifest reference is not utf-8"))?;
    let n_layers =
        u32::from_le_bytes(read_exact::<_, 4>(&mut r).map_err(|e| io_err(path, e))?) as usize;
    if n_layers == 0 || n_layers > 1024 {
        return Err(fmt_err(path, format!("implausible layer count {n_layers}")));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let n_mats =
            u32::from_le_bytes(read_exact::<_, 4>(&mut r).map_err(|e| io_err(path, e))?) as usize;
        if n_mats == 0 || n_mats > 8 {
            return Err(fmt_err(path, format!("implausible matrix count {n_mats}")));
        }
        let mut mats = Vec::with_capacity(n_mats);
        for _ in 0..n_mats {
            mats.push(read_mat(&mut r, path)?);
        }
        layers.push(LayerParams { mats });
    }
    let head = if has_head == 1 { Some(read_mat(&mut r, path)?) } else { None };
    let mut rest = [0u8; 1];
    match r.read(&mut rest) {
        Ok(0) => {}
        Ok(_) => return Err(fmt_err(path, "trailing bytes after checkpoint payload")),
        Err(e) => return Err(io_err(path, e)),
    }
    Ok((ModelParams { arch, layers, head, output }, manifest_ref))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_per_architecture() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gcn = ModelParams::new(Architecture::Gcn, 5, &[4, 3], Some(2), OutputMap::LogSoftmax, &mut rng);
        assert_eq!(gcn.layers[0].mats[0].dim(), (5, 4));
        assert_eq!(gcn.layers[1].mats[0].dim(), (4, 3));
        assert_eq!(gcn.head.as_ref().unwrap().dim(), (3, 2));
        assert_eq!(gcn.param_count(), 20 + 12 + 6);
        assert_eq!(gcn.input_dim(), 5);
        assert_eq!(gcn.embedding_dim(), 3);
        assert_eq!(gcn.output_dim(), 2);

        let sage = ModelParams::new(Architecture::Sage, 5, &[4], None, OutputMap::Identity, &mut rng);
        assert_eq!(sage.layers[0].mats[0].dim(), (10, 4));
        assert_eq!(sage.input_dim(), 5);

        let gin = ModelParams::new(Architecture::Gin, 5, &[4], None, OutputMap::Relu, &mut rng);
        assert_eq!(gin.layers[0].mats.len(), 2);
        assert_eq!(gin.layers[0].mats[0].dim(), (5, 4));
        assert_eq!(gin.layers[0].mats[1].dim(), (4, 4));
    }

    #[test]
    fn glorot_entries_within_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = glorot(6, 4, &mut rng);
        let limit = (6.0 / 10.0f64).sqrt();
        assert!(m.iter().all(|&x| x.abs() < limit));
        assert!(m.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn gradient_record_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ModelParams::new(Architecture::Gcn, 2, &[2], Some(2), OutputMap::LogSoftmax, &mut rng);
        let mut a = GradientRecord::zeros_like(&p);
        let mut b = GradientRecord::zeros_like(&p);
        a.layers[0][0][[0, 0]] = 3.0;
        a.loss = 1.0;
        b.layers[0][0][[0, 0]] = 1.0;
        b.head.as_mut().unwrap()[[1, 1]] = 4.0;
        b.loss = 2.0;
        a.add_scaled(&b, 0.5);
        assert_eq!(a.layers[0][0][[0, 0]], 3.5);
        assert_eq!(a.head.as_ref().unwrap()[[1, 1]], 2.0);
        assert_eq!(a.loss, 2.0);
        assert!((a.norm() - (3.5f64 * 3.5 + 4.0).sqrt()).abs() < 1e-15);
        a.scale(2.0);
        assert_eq!(a.layers[0][0][[0, 0]], 7.0);
        assert_eq!(a.loss, 4.0);
    }

    #[test]
    fn estimate_gradient_importance_correction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = ModelParams::new(Architecture::Gcn, 1, &[1], None, OutputMap::Identity, &mut rng);
        let mut r1 = GradientRecord::zeros_like(&p);
        r1.layers[0][0][[0, 0]] = 6.0;
        r1.loss = 6.0;
        let mut r2 = GradientRecord::zeros_like(&p);
        r2.layers[0][0][[0, 0]] = 4.0;
        r2.loss = 4.0;
        let est = estimate_gradient(&[r1, r2], &[2.0, 1.0]).unwrap();
        assert!((est.layers[0][0][[0, 0]] - (6.0 / 2.0 + 4.0) / 2.0).abs() < 1e-15);
        assert!((est.loss - 3.5).abs() < 1e-15);

        assert!(estimate_gradient(&[], &[]).is_err());
        let mut r3 = GradientRecord::zeros_like(&p);
        r3.loss = 1.0;
        assert!(estimate_gradient(&[r3.clone()], &[0.0]).is_err());
        assert!(estimate_gradient(&[r3], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = ModelParams::new(Architecture::Gin, 3, &[4, 2], Some(3), OutputMap::LogSoftmax, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&p, "manifest:abc123", &path).unwrap();
        let (q, mref) = load_checkpoint(&path).unwrap();
        assert_eq!(mref, "manifest:abc123");
        assert_eq!(p, q);
    }

    #[test]
    fn checkpoint_rejects_corruption() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = ModelParams::new(Architecture::Gcn, 2, &[2], None, OutputMap::Identity, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&p, "", &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(EngineError::CheckpointFormat { .. })
        ));

        save_checkpoint(&p, "", &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0);
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_checkpoint(&path).is_err());

        save_checkpoint(&p, "", &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(EngineError::CheckpointIo { .. })
        ));
    }
}
