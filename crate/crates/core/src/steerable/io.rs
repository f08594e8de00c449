use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SteerableTensor, TensorSignature};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"HOLOTNS1";

/// Named collection of double-precision tensors sharing one signature.
///
/// Two on-disk forms, both lossless:
/// * JSON: `{"signature": [[l, C], ...], "samples": [{"id": ..., "coefficients": [...]}]}`
/// * binary (little-endian): magic `HOLOTNS1`, `u32` part count, `(u32 l, u32 C)`
///   per part, `u64` sample count, then per sample a `u32` byte length, the
///   UTF-8 id and the `f64` coefficients in tensor layout.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorDataset {
    pub signature: TensorSignature,
    pub ids: Vec<String>,
    pub tensors: Vec<SteerableTensor<f64>>,
}

#[derive(Serialize, Deserialize)]
struct JsonSample {
    id: String,
    coefficients: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonDataset {
    signature: TensorSignature,
    samples: Vec<JsonSample>,
}

impl TensorDataset {
    pub fn new(signature: TensorSignature, ids: Vec<String>, tensors: Vec<SteerableTensor<f64>>) -> Result<Self> {
        if ids.len() != tensors.len() {
            return Err(Error::Shape(format!("{} ids for {} tensors", ids.len(), tensors.len())));
        }
        if let Some(t) = tensors.iter().find(|t| t.signature() != &signature) {
            return Err(Error::Shape(format!("tensor signature {} differs from dataset {signature}", t.signature())));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::Format(format!("duplicate sample id {dup:?}")));
        }
        Ok(Self { signature, ids, tensors })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    pub fn get(&self, id: &str) -> Option<&SteerableTensor<f64>> {
        self.index_of(id).map(|i| &self.tensors[i])
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = JsonDataset {
            signature: self.signature.clone(),
            samples: self
                .ids
                .iter()
                .zip(&self.tensors)
                .map(|(id, t)| JsonSample { id: id.clone(), coefficients: t.data().to_vec() })
                .collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: JsonDataset = serde_json::from_str(s)?;
        let mut ids = Vec::with_capacity(doc.samples.len());
        let mut tensors = Vec::with_capacity(doc.samples.len());
        for s in doc.samples {
            tensors.push(SteerableTensor::from_vec(doc.signature.clone(), s.coefficients)?);
            ids.push(s.id);
        }
        Self::new(doc.signature, ids, tensors)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.signature.parts().len() as u32).to_le_bytes())?;
        for &(l, c) in self.signature.parts() {
            w.write_all(&(l as u32).to_le_bytes())?;
            w.write_all(&(c as u32).to_le_bytes())?;
        }
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for (id, t) in self.ids.iter().zip(&self.tensors) {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            for v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a tensor dataset file".into()));
        }
        let read_u32 = |r: &mut R| -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        };
        let n_parts = read_u32(&mut r)? as usize;
        let mut parts = Vec::with_capacity(n_parts);
        for _ in 0..n_parts {
            let l = read_u32(&mut r)? as usize;
            let c = read_u32(&mut r)? as usize;
            parts.push((l, c));
        }
        let signature = TensorSignature::new(parts)?;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let mut ids = Vec::new();
        let mut tensors = Vec::new();
        for _ in 0..n {
            let len = read_u32(&mut r)? as usize;
            let mut idb = vec![0u8; len];
            r.read_exact(&mut idb)?;
            ids.push(String::from_utf8(idb).map_err(|e| Error::Format(format!("sample id is not UTF-8: {e}")))?);
            let mut data = Vec::with_capacity(signature.total_len());
            for _ in 0..signature.total_len() {
                r.read_exact(&mut b8)?;
                data.push(f64::from_le_bytes(b8));
            }
            tensors.push(SteerableTensor::from_vec(signature.clone(), data)?);
        }
        Self::new(signature, ids, tensors)
    }

    /// Writes JSON when the extension is `.json`, binary otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        if path.extension().is_some_and(|e| e == "json") {
            std::fs::write(path, self.to_json()?)?;
        } else {
            let mut w = BufWriter::new(File::create(path)?);
            self.write_binary(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&std::fs::read_to_string(path)?)
        } else {
            Self::read_binary(BufReader::new(File::open(path)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> TensorDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = TensorSignature::new(vec![(0, 2), (2, 3)]).unwrap();
        let ts: Vec<_> = (0..4).map(|_| SteerableTensor::random_normal(s.clone(), &mut rng).scale(1e-3)).collect();
        TensorDataset::new(s, (0..4).map(|i| format!("s{i}")).collect(), ts).unwrap()
    }

    #[test]
    fn json_round_trip_is_exact() {
        let d = sample();
        let back = TensorDataset::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let d = sample();
        let mut buf = Vec::new();
        d.write_binary(&mut buf).unwrap();
        assert_eq!(TensorDataset::read_binary(buf.as_slice()).unwrap(), d);
        buf[0] = b'X';
        assert!(TensorDataset::read_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn rejects_duplicates_and_mismatch() {
        let d = sample();
        let mut ids = d.ids.clone();
        ids[1] = ids[0].clone();
        assert!(TensorDataset::new(d.signature.clone(), ids, d.tensors.clone()).is_err());
        let other = TensorSignature::uniform(1, 1).unwrap();
        assert!(TensorDataset::new(other, d.ids.clone(), d.tensors.clone()).is_err());
    }
}
