//! Versioned binary checkpoints: `CKPT`, version, stage, seeds, vocabularies,
//! declared parameter shapes, the flat parameter array and trainer state.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::TranslationModel;
use super::trainer::{AdamConfig, LoaderCursor, TrainerState};
use crate::binio::{Reader, Writer};
use crate::corpus::{Side, Vocab};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CKPT";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Warmup,
    Converged,
    Finetuned,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Warmup => "warmup",
            Stage::Converged => "converged",
            Stage::Finetuned => "finetuned",
        }
    }

    fn tag(self) -> u8 {
        self as u8
    }

    fn from_tag(t: u8) -> Option<Self> {
        [Stage::Warmup, Stage::Converged, Stage::Finetuned].get(t as usize).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: TranslationModel,
    pub state: TrainerState,
    pub stage: Stage,
}

fn write_vocab<W: Write>(w: &mut Writer<W>, v: &Vocab) -> std::io::Result<()> {
    w.u8(matches!(v.side(), Side::Target) as u8)?;
    w.u32(v.min_count() as u32)?;
    w.u32(v.regular_tokens().len() as u32)?;
    for t in v.regular_tokens() {
        w.str(t)?;
    }
    Ok(())
}

fn read_vocab<R: Read>(r: &mut Reader<R>) -> Result<Vocab> {
    let side = if r.u8()? == 1 { Side::Target } else { Side::Source };
    let min_count = r.u32()? as usize;
    let n = r.u32()? as usize;
    let tokens = (0..n).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
    Vocab::from_tokens(side, min_count, tokens)
}

impl Checkpoint {
    pub fn new(model: TranslationModel, state: TrainerState, stage: Stage) -> Self {
        Self { model, state, stage }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(Vec::new());
        self.write_to(&mut w).expect("writing to memory");
        w.finish()
    }

    fn write_to<W: Write>(&self, w: &mut Writer<W>) -> std::io::Result<()> {
        let m = &self.model;
        let s = &self.state;
        w.bytes(MAGIC)?;
        w.u16(VERSION)?;
        w.u8(self.stage.tag())?;
        w.u64(m.seed())?;
        w.u64(s.seed)?;
        w.u32(m.dim() as u32)?;
        write_vocab(w, m.src_vocab())?;
        write_vocab(w, m.tgt_vocab())?;
        let blocks = m.layout().blocks();
        w.u32(blocks.len() as u32)?;
        for (name, rows, cols) in blocks {
            w.str(name)?;
            w.u64(rows as u64)?;
            w.u64(cols as u64)?;
        }
        w.f64s(m.params())?;
        w.f64(s.adam.lr)?;
        w.f64(s.adam.beta1)?;
        w.f64(s.adam.beta2)?;
        w.f64(s.adam.eps)?;
        w.u64(s.batch_size as u64)?;
        w.f64(s.clip_norm)?;
        w.u64(s.adam_step)?;
        w.u64(s.update_count)?;
        w.u64(s.loader.fingerprint)?;
        w.u64(s.loader.pass)?;
        w.u64(s.loader.position)?;
        w.f64s(&s.m)?;
        w.f64s(&s.v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = Writer::new(BufWriter::new(file));
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.finish().flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }

    fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut r = Reader::new(input, "CKPT");
        r.header(MAGIC, VERSION)?;
        let tag = r.u8()?;
        let stage = Stage::from_tag(tag).ok_or_else(|| r.malformed(format!("unknown stage tag {tag}")))?;
        let model_seed = r.u64()?;
        let trainer_seed = r.u64()?;
        let d = r.u32()? as usize;
        let src = read_vocab(&mut r)?;
        let tgt = read_vocab(&mut r)?;
        let n_blocks = r.u32()? as usize;
        let mut declared = Vec::with_capacity(n_blocks);
        for _ in 0..n_blocks {
            declared.push((r.str()?, r.u64()? as usize, r.u64()? as usize));
        }
        let params = r.f64s()?;
        let model = TranslationModel::from_parts(src, tgt, d, model_seed, params)?;
        let expected: Vec<(String, usize, usize)> =
            model.layout().blocks().iter().map(|(n, a, b)| (n.to_string(), *a, *b)).collect();
        if declared != expected {
            return Err(r.malformed("declared parameter shapes do not match the architecture"));
        }
        let adam = AdamConfig { lr: r.f64()?, beta1: r.f64()?, beta2: r.f64()?, eps: r.f64()? };
        let batch_size = r.u64()? as usize;
        let clip_norm = r.f64()?;
        let mut state = TrainerState::new(&model, adam, batch_size, clip_norm, trainer_seed)?;
        state.adam_step = r.u64()?;
        state.update_count = r.u64()?;
        state.loader = LoaderCursor { fingerprint: r.u64()?, pass: r.u64()?, position: r.u64()? };
        state.m = r.f64s()?;
        state.v = r.f64s()?;
        if state.m.len() != model.params().len() || state.v.len() != model.params().len() {
            return Err(r.malformed("optimizer moments do not match the parameter count"));
        }
        Ok(Self { model, state, stage })
    }
}
