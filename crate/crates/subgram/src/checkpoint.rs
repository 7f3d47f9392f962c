//! Binary checkpoint container: pipeline configuration plus every
//! parameter and accumulator matrix with shape headers. Round-trips are
//! bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::model::ModelParameters;

const MAGIC: &[u8; 4] = b"SGCK";
const VERSION: u32 = 1;

pub fn save(path: &Path, config: &PipelineConfig, params: &ModelParameters) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);

    out.write_all(MAGIC).map_err(io_err)?;
    out.write_u32::<LittleEndian>(VERSION).map_err(io_err)?;
    let config_json = serde_json::to_vec(config)
        .map_err(|e| Error::parse(path, format!("config serialization: {e}")))?;
    out.write_u64::<LittleEndian>(config_json.len() as u64)
        .map_err(io_err)?;
    out.write_all(&config_json).map_err(io_err)?;

    for matrix in matrices(params) {
        out.write_u64::<LittleEndian>(matrix.nrows() as u64)
            .map_err(io_err)?;
        out.write_u64::<LittleEndian>(matrix.ncols() as u64)
            .map_err(io_err)?;
        for &value in matrix.iter() {
            out.write_f64::<LittleEndian>(value).map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<(PipelineConfig, ModelParameters)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut input = BufReader::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);

    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(Error::parse(path, "not a checkpoint file"));
    }
    let version = input.read_u32::<LittleEndian>().map_err(io_err)?;
    if version != VERSION {
        return Err(Error::parse(path, format!("unsupported version {version}")));
    }
    let config_len = input.read_u64::<LittleEndian>().map_err(io_err)? as usize;
    let mut config_json = vec![0u8; config_len];
    input.read_exact(&mut config_json).map_err(io_err)?;
    let config: PipelineConfig = serde_json::from_slice(&config_json)
        .map_err(|e| Error::parse(path, format!("config deserialization: {e}")))?;

    let mut read_matrix = || -> Result<Array2<f64>> {
        let rows = input.read_u64::<LittleEndian>().map_err(io_err)? as usize;
        let cols = input.read_u64::<LittleEndian>().map_err(io_err)? as usize;
        let mut data = vec![0.0; rows * cols];
        for value in &mut data {
            *value = input.read_f64::<LittleEndian>().map_err(io_err)?;
        }
        Array2::from_shape_vec((rows, cols), data)
            .map_err(|e| Error::parse(path, format!("matrix shape: {e}")))
    };

    let subword = read_matrix()?;
    let position = read_matrix()?;
    let context = read_matrix()?;
    let attn_hidden = read_matrix()?;
    let attn_heads = read_matrix()?;
    let acc_subword = read_matrix()?;
    let acc_position = read_matrix()?;
    let acc_context = read_matrix()?;
    let acc_attn_hidden = read_matrix()?;
    let acc_attn_heads = read_matrix()?;

    let params = ModelParameters {
        dim: config.dim,
        subword,
        position,
        context,
        attn_hidden,
        attn_heads,
        acc_subword,
        acc_position,
        acc_context,
        acc_attn_hidden,
        acc_attn_heads,
    };
    Ok((config, params))
}

fn matrices(params: &ModelParameters) -> [&Array2<f64>; 10] {
    [
        &params.subword,
        &params.position,
        &params.context,
        &params.attn_hidden,
        &params.attn_heads,
        &params.acc_subword,
        &params.acc_position,
        &params.acc_context,
        &params.acc_attn_hidden,
        &params.acc_attn_heads,
    ]
}
