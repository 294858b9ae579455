//! Model checkpoints: one line of JSON describing every tensor, a newline,
//! then all tensors as little-endian f64 in header order.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{Architecture, AutoencoderParams};
use crate::dataset::ViewLayout;
use crate::selfexpr::SelfExprState;
use crate::{Error, Result};

const FORMAT: &str = "mvsc-checkpoint";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub seed: u64,
    pub epoch: usize,
    pub clusters: Option<usize>,
    /// View-specific auto-encoders.
    pub dnet: Vec<AutoencoderParams>,
    /// Auto-encoders feeding the shared coefficient matrix.
    pub unet: Vec<AutoencoderParams>,
    pub state: SelfExprState,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    seed: u64,
    epoch: usize,
    clusters: Option<usize>,
    n_samples: usize,
    views: Vec<ViewHeader>,
    tensors: Vec<TensorHeader>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ViewHeader {
    layout: ViewLayout,
    architecture: Architecture,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
}

impl Checkpoint {
    fn named_tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = Vec::new();
        for (net, models) in [("dnet", &self.dnet), ("unet", &self.unet)] {
            for (v, model) in models.iter().enumerate() {
                let n_enc = model.encoder.len();
                for (l, (shape, data)) in model.tensor_shapes().into_iter().zip(model.tensors()).enumerate() {
                    let name = if l < n_enc {
                        format!("{net}.{v}.encoder.{l}")
                    } else {
                        format!("{net}.{v}.decoder.{}", l - n_enc)
                    };
                    out.push((name, shape, data));
                }
            }
        }
        let n = self.state.n_samples();
        out.push((
            "z".into(),
            vec![n, n],
            self.state.common.as_slice().expect("standard layout"),
        ));
        for (v, z) in self.state.views.iter().enumerate() {
            out.push((format!("z.{v}"), vec![n, n], z.as_slice().expect("standard layout")));
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let tensors = self.named_tensors();
        let header = Header {
            format: FORMAT.into(),
            version: VERSION,
            seed: self.seed,
            epoch: self.epoch,
            clusters: self.clusters,
            n_samples: self.state.n_samples(),
            views: self
                .dnet
                .iter()
                .map(|m| ViewHeader {
                    layout: m.input_shape(),
                    architecture: m.architecture().clone(),
                })
                .collect(),
            tensors: tensors
                .iter()
                .map(|(name, shape, _)| TensorHeader {
                    name: name.clone(),
                    shape: shape.clone(),
                })
                .collect(),
        };
        let mut bytes = serde_json::to_vec(&header).expect("header serializes");
        bytes.push(b'\n');
        for (_, _, data) in &tensors {
            for v in *data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let split = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Checkpoint("missing header terminator".into()))?;
        let header: Header =
            serde_json::from_slice(&bytes[..split]).map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
        if header.format != FORMAT || header.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format {} v{}",
                header.format, header.version
            )));
        }
        let payload = &bytes[split + 1..];
        if !payload.len().is_multiple_of(8) {
            return Err(Error::Checkpoint("payload is not a whole number of f64".into()));
        }
        let mut values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));

        let build = || -> Result<Vec<AutoencoderParams>> {
            header
                .views
                .iter()
                .map(|v| AutoencoderParams::zeros(v.layout, &v.architecture))
                .collect()
        };
        let n = header.n_samples;
        let mut ckpt = Checkpoint {
            seed: header.seed,
            epoch: header.epoch,
            clusters: header.clusters,
            dnet: build()?,
            unet: build()?,
            state: SelfExprState::zeros(n, header.views.len()),
        };
        let expected: Vec<(String, Vec<usize>)> = ckpt
            .named_tensors()
            .into_iter()
            .map(|(name, shape, _)| (name, shape))
            .collect();
        if expected.len() != header.tensors.len()
            || expected
                .iter()
                .zip(&header.tensors)
                .any(|((name, shape), t)| *name != t.name || *shape != t.shape)
        {
            return Err(Error::Checkpoint("tensor list does not match the architecture".into()));
        }
        let total: usize = expected.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
        if total * 8 != payload.len() {
            return Err(Error::Checkpoint(format!(
                "payload holds {} values, header describes {total}",
                payload.len() / 8
            )));
        }
        let mut fill = |dst: &mut [f64]| {
            for d in dst {
                *d = values.next().expect("length checked");
            }
        };
        for model in ckpt.dnet.iter_mut().chain(ckpt.unet.iter_mut()) {
            for t in model.tensors_mut() {
                fill(t);
            }
        }
        let read_matrix = |fill: &mut dyn FnMut(&mut [f64])| {
            let mut m = Array2::zeros((n, n));
            fill(m.as_slice_mut().expect("standard layout"));
            m
        };
        ckpt.state.common = read_matrix(&mut fill);
        for z in ckpt.state.views.iter_mut() {
            *z = read_matrix(&mut fill);
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
