//! Flat binary container for problem instances, used for regression
//! fixtures.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic    b"LSRI"
//! version  u32 (= 1)
//! n        u64
//! m        u64
//! alpha    f64
//! rho      f64
//! sigma2   f64
//! seed     u64
//! A        m * n f64, row-major
//! x_true   n f64
//! noise    m f64
//! y        m f64
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{ProblemConfig, ProblemInstance};

pub const MAGIC: &[u8; 4] = b"LSRI";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 * 6;

pub fn encode_instance(instance: &ProblemInstance) -> Vec<u8> {
    let (m, n) = instance.a_matrix.shape();
    let cfg = &instance.config;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (m * n + n + 2 * m));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.extend_from_slice(&cfg.alpha.to_le_bytes());
    out.extend_from_slice(&cfg.rho.to_le_bytes());
    out.extend_from_slice(&cfg.sigma2.to_le_bytes());
    out.extend_from_slice(&cfg.seed.to_le_bytes());
    for i in 0..m {
        for j in 0..n {
            out.extend_from_slice(&instance.a_matrix[(i, j)].to_le_bytes());
        }
    }
    for v in instance
        .x_true
        .iter()
        .chain(instance.noise.iter())
        .chain(instance.y.iter())
    {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self
            .pos
            .checked_add(K)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let mut buf = [0u8; K];
        buf.copy_from_slice(&self.data[self.pos..end]);
        self.pos = end;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }

    fn finite_values(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(count);
        for _ in 0..count {
            let x = self.f64()?;
            if !x.is_finite() {
                return Err(Error::Format(format!("non-finite value in {what}")));
            }
            v.push(x);
        }
        Ok(v)
    }
}

/// Decodes an instance written by [`encode_instance`].
///
/// The byte length is checked against the declared dimensions before any
/// allocation, and the identity `y = A x + w` is verified.
pub fn decode_instance(data: &[u8]) -> Result<ProblemInstance> {
    let mut r = Reader { data, pos: 0 };
    if &r.take::<4>()? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = usize::try_from(r.u64()?).map_err(|_| Error::Format("n overflows".into()))?;
    let m = usize::try_from(r.u64()?).map_err(|_| Error::Format("m overflows".into()))?;
    let alpha = r.f64()?;
    let rho = r.f64()?;
    let sigma2 = r.f64()?;
    let seed = r.u64()?;
    let config = ProblemConfig {
        n,
        alpha,
        rho,
        sigma2,
        seed,
    };
    config.validate().map_err(|e| Error::Format(e.to_string()))?;
    if config.m() != m {
        return Err(Error::Format(format!(
            "declared m = {m} does not match round(alpha * n) = {}",
            config.m()
        )));
    }

    let payload = m
        .checked_mul(n)
        .and_then(|mn| mn.checked_add(n))
        .and_then(|k| k.checked_add(2 * m))
        .and_then(|k| k.checked_mul(8))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    if data.len() - HEADER_LEN != payload {
        return Err(Error::Format(format!(
            "expected {payload} payload bytes, found {}",
            data.len() - HEADER_LEN
        )));
    }

    let a = r.finite_values(m * n, "A")?;
    let a_matrix = DMatrix::from_row_slice(m, n, &a);
    let x_true = DVector::from_vec(r.finite_values(n, "x_true")?);
    let noise = DVector::from_vec(r.finite_values(m, "noise")?);
    let y = DVector::from_vec(r.finite_values(m, "y")?);

    let expected = &a_matrix * &x_true + &noise;
    for (i, (&got, &want)) in y.iter().zip(expected.iter()).enumerate() {
        if !((got - want).abs() <= 1e-9 * (1.0 + want.abs())) {
            return Err(Error::Format(format!("y[{i}] is inconsistent with A x + w")));
        }
    }
    Ok(ProblemInstance {
        a_matrix,
        x_true,
        noise,
        y,
        config,
    })
}

pub fn write_instance(path: &std::path::Path, instance: &ProblemInstance) -> Result<()> {
    std::fs::write(path, encode_instance(instance))?;
    Ok(())
}

pub fn read_instance(path: &std::path::Path) -> Result<ProblemInstance> {
    decode_instance(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::generate_instance;
    use proptest::prelude::*;

    fn small() -> ProblemInstance {
        generate_instance(&ProblemConfig::new(12, 0.5, 0.4, 0.01, 99).unwrap()).unwrap()
    }

    #[test]
    fn round_trip() {
        let inst = small();
        let bytes = encode_instance(&inst);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * (6 * 12 + 12 + 12));
        assert_eq!(decode_instance(&bytes).unwrap(), inst);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode_instance(&small());
        assert!(decode_instance(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_instance(&[]).is_err());

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_instance(&bad).is_err());

        // m no longer consistent with alpha
        let mut bad = bytes.clone();
        bad[16..24].copy_from_slice(&7u64.to_le_bytes());
        assert!(decode_instance(&bad).is_err());

        // perturb one entry of y
        let mut bad = bytes.clone();
        let last = bad.len() - 8;
        let v = f64::from_le_bytes(bad[last..].try_into().unwrap()) + 1.0;
        bad[last..].copy_from_slice(&v.to_le_bytes());
        assert!(decode_instance(&bad).is_err());

        // NaN in A
        let mut bad = bytes;
        bad[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode_instance(&bad).is_err());
    }

    #[test]
    fn huge_declared_dimensions_do_not_allocate() {
        let mut bytes = encode_instance(&small());
        bytes[8..16].copy_from_slice(&(u64::MAX / 2).to_le_bytes());
        assert!(decode_instance(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn decoding_arbitrary_bytes_never_panics(data in proptest::collection::vec(any::<u8>(), 0..256)) {
            let _ = decode_instance(&data);
        }

        #[test]
        fn round_trip_random_configs(n in 1usize..20, alpha in 0.05f64..1.5, rho in 0.0f64..=1.0, seed in any::<u64>()) {
            let inst = generate_instance(&ProblemConfig::new(n, alpha, rho, 0.1, seed).unwrap()).unwrap();
            prop_assert_eq!(decode_instance(&encode_instance(&inst)).unwrap(), inst);
        }
    }
}
