//! Parameter checkpoints: one `.gft` file per tensor plus a `checkpoint.txt`
//! manifest of `key=value` lines. Tensors are stored at 32-bit precision.

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::io::{read_gft, write_gft};
use crate::kv::KvFile;
use crate::nn::{Activation, GcnConfig, MlpConfig, ModelConfig, Params, Tensor2, WeightInit};

const MANIFEST: &str = "checkpoint.txt";

fn tensor_file(i: usize) -> String {
    format!("param_{i:03}.gft")
}

pub fn save_checkpoint(dir: &Path, cfg: &ModelConfig, params: &Params) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut kv = KvFile::new();
    kv.push("model", cfg.kind());
    let dims: Vec<String> = cfg.layer_dims().iter().map(usize::to_string).collect();
    kv.push("layer_dims", dims.join(","));
    kv.push("dropout", cfg.dropout());
    kv.push("bias", cfg.bias());
    if let ModelConfig::Gcn(g) = cfg {
        kv.push("self_loops", g.self_loops);
    }
    kv.push("tensors", params.tensors.len());
    for (i, t) in params.tensors.iter().enumerate() {
        let m = FeatureMatrix::new(t.rows, t.cols, t.data.clone())?;
        write_gft(&dir.join(tensor_file(i)), &m)?;
        kv.push(format!("tensor.{i}"), format!("{}x{}", t.rows, t.cols));
    }
    kv.write(&dir.join(MANIFEST))
}

pub fn load_checkpoint(dir: &Path) -> Result<(ModelConfig, Params)> {
    let path = dir.join(MANIFEST);
    let kv = KvFile::read(&path)?;
    let missing = |k: &str| Error::format(&path, format!("missing key {k}"));
    let dims: Vec<usize> = kv.parsed_list("layer_dims", &path)?.ok_or_else(|| missing("layer_dims"))?;
    if dims.len() < 2 {
        return Err(Error::format(&path, "layer_dims needs at least two entries"));
    }
    let dropout: f64 = kv.parsed("dropout", &path)?.ok_or_else(|| missing("dropout"))?;
    let bias: bool = kv.parsed("bias", &path)?.ok_or_else(|| missing("bias"))?;
    let kind: crate::nn::ModelKind = kv
        .get("model")
        .ok_or_else(|| missing("model"))?
        .parse()
        .map_err(|e: Error| Error::format(&path, e.to_string()))?;
    let cfg = match kind {
        crate::nn::ModelKind::Mlp => ModelConfig::Mlp(MlpConfig {
            in_dim: dims[0],
            hidden_dims: dims[1..dims.len() - 1].to_vec(),
            out_dim: *dims.last().unwrap(),
            dropout,
            activation: Activation::Relu,
            weight_init: WeightInit::GlorotUniform,
            bias,
        }),
        crate::nn::ModelKind::Gcn => ModelConfig::Gcn(GcnConfig {
            in_dim: dims[0],
            hidden_dim: if dims.len() > 2 { dims[1] } else { *dims.last().unwrap() },
            out_dim: *dims.last().unwrap(),
            num_layers: dims.len() - 1,
            dropout,
            self_loops: kv.parsed("self_loops", &path)?.unwrap_or(true),
            bias,
        }),
    };
    let count: usize = kv.parsed("tensors", &path)?.ok_or_else(|| missing("tensors"))?;
    let mut tensors = Vec::with_capacity(count);
    for i in 0..count {
        let m = read_gft(&dir.join(tensor_file(i)))?;
        tensors.push(Tensor2::from_vec(m.rows(), m.cols(), m.into_data())?);
    }
    let params = Params { tensors, bias };
    if cfg.layer_dims() != dims {
        return Err(Error::format(&path, "layer_dims cannot be expressed by the model kind"));
    }
    Ok((cfg, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_at_storage_precision() {
        let cfg = ModelConfig::Gcn(GcnConfig {
            in_dim: 5,
            hidden_dim: 4,
            out_dim: 3,
            num_layers: 2,
            dropout: 0.25,
            self_loops: true,
            bias: true,
        });
        let params = cfg.init_params(9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(dir.path(), &cfg, &params).unwrap();
        let (cfg2, p2) = load_checkpoint(dir.path()).unwrap();
        assert_eq!(cfg2, cfg);
        for (a, b) in params.tensors.iter().zip(&p2.tensors) {
            assert_eq!(a.shape(), b.shape());
            assert!(a.max_abs_diff(b) < 1e-6);
        }
    }
}
