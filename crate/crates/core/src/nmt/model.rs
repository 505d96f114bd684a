//! Single-layer GRU encoder-decoder with dot-product attention.
//!
//! All parameters live in one flat buffer; [`Layout`] names the blocks.
//! Gradients are derived by hand and checked against finite differences in
//! the crate's integration tests.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernels::{affine, axpy, dot, matvec, matvec_t_acc, outer_acc, sigmoid, softmax_in_place};
use crate::corpus::{BitextPair, Corpus, Vocab, BOS, EOS, PAD};
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_DIM: usize = 64;
pub const INIT_RANGE: f64 = 0.08;

/// How per-token probabilities are averaged into a prediction score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMean {
    #[default]
    Arithmetic,
    Geometric,
}

/// Shapes of the parameter blocks, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub d: usize,
    pub src_vocab: usize,
    pub tgt_vocab: usize,
}

impl Layout {
    pub fn blocks(&self) -> [(&'static str, usize, usize); 15] {
        let (d, vs, vt) = (self.d, self.src_vocab, self.tgt_vocab);
        [
            ("emb_src", vs, d),
            ("emb_tgt", vt, d),
            ("enc.w", 3 * d, d),
            ("enc.u", 3 * d, d),
            ("enc.b", 3 * d, 1),
            ("enc.bu", 3 * d, 1),
            ("dec.w", 3 * d, d),
            ("dec.u", 3 * d, d),
            ("dec.b", 3 * d, 1),
            ("dec.bu", 3 * d, 1),
            ("attn.w", d, d),
            ("comb.w", d, 2 * d),
            ("comb.b", d, 1),
            ("out.w", vt, d),
            ("out.b", vt, 1),
        ]
    }

    pub fn len(&self) -> usize {
        self.blocks().iter().map(|(_, r, c)| r * c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (rows, cols) of a named block.
    pub fn shape(&self, name: &str) -> Option<(usize, usize)> {
        self.blocks().iter().find(|b| b.0 == name).map(|b| (b.1, b.2))
    }

    /// Offset of a named block in the flat buffer.
    pub fn offset(&self, name: &str) -> Option<usize> {
        let mut off = 0;
        for (n, r, c) in self.blocks() {
            if n == name {
                return Some(off);
            }
            off += r * c;
        }
        None
    }
}

pub(crate) struct GruBlocks<T> {
    w: T,
    u: T,
    b: T,
    bu: T,
}

pub(crate) struct Blocks<T> {
    emb_src: T,
    emb_tgt: T,
    enc: GruBlocks<T>,
    dec: GruBlocks<T>,
    attn: T,
    comb_w: T,
    comb_b: T,
    out_w: T,
    out_b: T,
}

impl<T> Blocks<T> {
    fn assemble(parts: Vec<T>) -> Self {
        let mut it = parts.into_iter();
        let mut n = || it.next().expect("block count");
        Blocks {
            emb_src: n(),
            emb_tgt: n(),
            enc: GruBlocks { w: n(), u: n(), b: n(), bu: n() },
            dec: GruBlocks { w: n(), u: n(), b: n(), bu: n() },
            attn: n(),
            comb_w: n(),
            comb_b: n(),
            out_w: n(),
            out_b: n(),
        }
    }
}

fn split<'a>(layout: &Layout, mut buf: &'a [f64]) -> Blocks<&'a [f64]> {
    let mut parts = Vec::with_capacity(15);
    for (_, r, c) in layout.blocks() {
        let (a, rest) = buf.split_at(r * c);
        parts.push(a);
        buf = rest;
    }
    Blocks::assemble(parts)
}

fn split_mut<'a>(layout: &Layout, mut buf: &'a mut [f64]) -> Blocks<&'a mut [f64]> {
    let mut parts = Vec::with_capacity(15);
    for (_, r, c) in layout.blocks() {
        let (a, rest) = buf.split_at_mut(r * c);
        parts.push(a);
        buf = rest;
    }
    Blocks::assemble(parts)
}

/// A pair mapped to vocabulary ids. The source carries a trailing end marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPair {
    pub id: usize,
    pub src: Vec<u32>,
    pub tgt: Vec<u32>,
}

/// A corpus encoded once against a model's vocabularies.
#[derive(Debug, Clone)]
pub struct EncodedCorpus {
    pub pairs: Vec<EncodedPair>,
}

impl EncodedCorpus {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs whose id is in `ids`, in the given order.
    pub fn select(&self, ids: &[usize]) -> EncodedCorpus {
        let pos: std::collections::HashMap<usize, usize> =
            self.pairs.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
        EncodedCorpus {
            pairs: ids.iter().filter_map(|id| pos.get(id)).map(|&i| self.pairs[i].clone()).collect(),
        }
    }
}

struct GruTrace {
    /// States `0..=len`, state 0 is the initial state.
    h: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    hn: Vec<f64>,
}

impl GruTrace {
    fn new(len: usize, d: usize, h0: &[f64]) -> Self {
        let mut h = vec![0.0; (len + 1) * d];
        h[..d].copy_from_slice(h0);
        Self { h, r: vec![0.0; len * d], z: vec![0.0; len * d], n: vec![0.0; len * d], hn: vec![0.0; len * d] }
    }
}

struct Scratch {
    gi: Vec<f64>,
    gh: Vec<f64>,
}

impl Scratch {
    fn new(d: usize) -> Self {
        Self { gi: vec![0.0; 3 * d], gh: vec![0.0; 3 * d] }
    }
}

/// One GRU step; writes gates for step `t` into `tr` and the new state into `tr.h[t+1]`.
fn gru_step(g: &GruBlocks<&[f64]>, d: usize, x: &[f64], tr: &mut GruTrace, t: usize, sc: &mut Scratch) {
    let (prev, next) = tr.h.split_at_mut((t + 1) * d);
    let h = &prev[t * d..];
    let h_new = &mut next[..d];
    affine(g.w, g.b, x, &mut sc.gi);
    affine(g.u, g.bu, h, &mut sc.gh);
    let span = t * d..(t + 1) * d;
    let (r, z, n, hn) = (&mut tr.r[span.clone()], &mut tr.z[span.clone()], &mut tr.n[span.clone()], &mut tr.hn[span]);
    for i in 0..d {
        r[i] = sigmoid(sc.gi[i] + sc.gh[i]);
        z[i] = sigmoid(sc.gi[d + i] + sc.gh[d + i]);
        hn[i] = sc.gh[2 * d + i];
        n[i] = (sc.gi[2 * d + i] + r[i] * hn[i]).tanh();
        h_new[i] = (1.0 - z[i]) * n[i] + z[i] * h[i];
    }
}

/// Backward through step `t`. Accumulates into `gg`, `dx`, and `dh_prev`.
#[allow(clippy::too_many_arguments)]
fn gru_step_back(
    g: &GruBlocks<&[f64]>,
    gg: &mut GruBlocks<&mut [f64]>,
    d: usize,
    x: &[f64],
    tr: &GruTrace,
    t: usize,
    dh: &[f64],
    dx: &mut [f64],
    dh_prev: &mut [f64],
    sc: &mut Scratch,
) {
    let h = &tr.h[t * d..(t + 1) * d];
    let span = t * d..(t + 1) * d;
    let (r, z, n, hn) = (&tr.r[span.clone()], &tr.z[span.clone()], &tr.n[span.clone()], &tr.hn[span]);
    let (dgi, dgh) = (&mut sc.gi, &mut sc.gh);
    for i in 0..d {
        let dn = dh[i] * (1.0 - z[i]);
        let dz = dh[i] * (h[i] - n[i]);
        dh_prev[i] += dh[i] * z[i];
        let dnp = dn * (1.0 - n[i] * n[i]);
        let dr = dnp * hn[i];
        let drp = dr * r[i] * (1.0 - r[i]);
        let dzp = dz * z[i] * (1.0 - z[i]);
        dgi[i] = drp;
        dgi[d + i] = dzp;
        dgi[2 * d + i] = dnp;
        dgh[i] = drp;
        dgh[d + i] = dzp;
        dgh[2 * d + i] = dnp * r[i];
    }
    outer_acc(gg.w, dgi, x);
    axpy(1.0, dgi, gg.b);
    matvec_t_acc(g.w, dgi, dx);
    outer_acc(gg.u, dgh, h);
    axpy(1.0, dgh, gg.bu);
    matvec_t_acc(g.u, dgh, dh_prev);
}

struct EncTrace {
    ids: Vec<u32>,
    gru: GruTrace,
    /// Attention keys `attn.w h_j` for encoder states 1..=len.
    keys: Vec<f64>,
}

impl EncTrace {
    fn len(&self) -> usize {
        self.ids.len()
    }

    fn state(&self, j: usize, d: usize) -> &[f64] {
        &self.gru.h[(j + 1) * d..(j + 2) * d]
    }

    fn final_state(&self, d: usize) -> &[f64] {
        self.state(self.len() - 1, d)
    }
}

struct DecTrace {
    inputs: Vec<u32>,
    targets: Vec<u32>,
    gru: GruTrace,
    alpha: Vec<f64>,
    ctx: Vec<f64>,
    o: Vec<f64>,
    probs: Vec<f64>,
    logp: Vec<f64>,
}

/// Per-step decoder outputs reused by greedy decoding.
struct StepOut {
    alpha: Vec<f64>,
    ctx: Vec<f64>,
    cat: Vec<f64>,
    o: Vec<f64>,
    logits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationModel {
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    d: usize,
    seed: u64,
    params: Vec<f64>,
}

impl TranslationModel {
    /// Parameters drawn from a seeded uniform(-0.08, 0.08).
    pub fn new(src_vocab: Vocab, tgt_vocab: Vocab, d: usize, seed: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("model width must be >= 2, got {d}")));
        }
        if src_vocab.is_empty() || tgt_vocab.is_empty() {
            return Err(Error::invalid("cannot build a model over an empty vocabulary"));
        }
        let layout = Layout { d, src_vocab: src_vocab.len(), tgt_vocab: tgt_vocab.len() };
        let mut rng = seed::rng_for(seed, "model.init");
        let params = (0..layout.len()).map(|_| rng.gen_range(-INIT_RANGE..INIT_RANGE)).collect();
        Ok(Self { src_vocab, tgt_vocab, d, seed, params })
    }

    /// Rebuilds a model from stored parameters.
    pub fn from_parts(src_vocab: Vocab, tgt_vocab: Vocab, d: usize, seed: u64, params: Vec<f64>) -> Result<Self> {
        let layout = Layout { d, src_vocab: src_vocab.len(), tgt_vocab: tgt_vocab.len() };
        if params.len() != layout.len() {
            return Err(Error::invalid(format!(
                "parameter count {} does not match layout ({})",
                params.len(),
                layout.len()
            )));
        }
        Ok(Self { src_vocab, tgt_vocab, d, seed, params })
    }

    pub fn layout(&self) -> Layout {
        Layout { d: self.d, src_vocab: self.src_vocab.len(), tgt_vocab: self.tgt_vocab.len() }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn src_vocab(&self) -> &Vocab {
        &self.src_vocab
    }

    pub fn tgt_vocab(&self) -> &Vocab {
        &self.tgt_vocab
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn encode_pair(&self, pair: &BitextPair) -> EncodedPair {
        let mut src = self.src_vocab.encode(&pair.src);
        src.push(EOS);
        EncodedPair { id: pair.id, src, tgt: self.tgt_vocab.encode(&pair.tgt) }
    }

    pub fn encode_corpus(&self, corpus: &Corpus) -> EncodedCorpus {
        EncodedCorpus { pairs: corpus.pairs().iter().map(|p| self.encode_pair(p)).collect() }
    }

    fn weights(&self) -> Blocks<&[f64]> {
        split(&self.layout(), &self.params)
    }

    fn encode(&self, w: &Blocks<&[f64]>, src: &[u32]) -> EncTrace {
        let d = self.d;
        let len = src.len();
        let mut gru = GruTrace::new(len, d, &vec![0.0; d]);
        let mut sc = Scratch::new(d);
        for (t, &id) in src.iter().enumerate() {
            let x = &w.emb_src[id as usize * d..(id as usize + 1) * d];
            gru_step(&w.enc, d, x, &mut gru, t, &mut sc);
        }
        let mut keys = vec![0.0; len * d];
        for j in 0..len {
            matvec(w.attn, &gru.h[(j + 1) * d..(j + 2) * d], &mut keys[j * d..(j + 1) * d]);
        }
        EncTrace { ids: src.to_vec(), gru, keys }
    }

    /// Attention, combination and output layer for a decoder state `s`. Leaves
    /// target probabilities in `out.logits`.
    fn readout(&self, w: &Blocks<&[f64]>, enc: &EncTrace, s: &[f64], out: &mut StepOut) {
        let d = self.d;
        let len = enc.len();
        for j in 0..len {
            out.alpha[j] = dot(s, &enc.keys[j * d..(j + 1) * d]);
        }
        softmax_in_place(&mut out.alpha[..len]);
        out.ctx.iter_mut().for_each(|c| *c = 0.0);
        for j in 0..len {
            axpy(out.alpha[j], enc.state(j, d), &mut out.ctx);
        }
        out.cat[..d].copy_from_slice(s);
        out.cat[d..].copy_from_slice(&out.ctx);
        affine(w.comb_w, w.comb_b, &out.cat, &mut out.o);
        out.o.iter_mut().for_each(|v| *v = v.tanh());
        affine(w.out_w, w.out_b, &out.o, &mut out.logits);
        softmax_in_place(&mut out.logits);
    }

    fn step_out(&self, src_len: usize) -> StepOut {
        let d = self.d;
        StepOut {
            alpha: vec![0.0; src_len],
            ctx: vec![0.0; d],
            cat: vec![0.0; 2 * d],
            o: vec![0.0; d],
            logits: vec![0.0; self.tgt_vocab.len()],
        }
    }

    fn decode_trace(&self, w: &Blocks<&[f64]>, enc: &EncTrace, tgt: &[u32]) -> DecTrace {
        let d = self.d;
        let vt = self.tgt_vocab.len();
        let steps = tgt.len() + 1;
        let mut inputs = Vec::with_capacity(steps);
        inputs.push(BOS);
        inputs.extend_from_slice(tgt);
        let mut targets = tgt.to_vec();
        targets.push(EOS);

        let l = enc.len();
        let mut tr = DecTrace {
            inputs,
            targets,
            gru: GruTrace::new(steps, d, enc.final_state(d)),
            alpha: vec![0.0; steps * l],
            ctx: vec![0.0; steps * d],
            o: vec![0.0; steps * d],
            probs: vec![0.0; steps * vt],
            logp: vec![0.0; steps],
        };
        let mut sc = Scratch::new(d);
        let mut out = self.step_out(l);
        for t in 0..steps {
            let y = tr.inputs[t] as usize;
            gru_step(&w.dec, d, &w.emb_tgt[y * d..(y + 1) * d], &mut tr.gru, t, &mut sc);
            self.readout(w, enc, &tr.gru.h[(t + 1) * d..(t + 2) * d], &mut out);
            tr.alpha[t * l..(t + 1) * l].copy_from_slice(&out.alpha);
            tr.ctx[t * d..(t + 1) * d].copy_from_slice(&out.ctx);
            tr.o[t * d..(t + 1) * d].copy_from_slice(&out.o);
            tr.probs[t * vt..(t + 1) * vt].copy_from_slice(&out.logits);
            tr.logp[t] = out.logits[tr.targets[t] as usize].ln();
        }
        tr
    }

    /// Teacher-forced log-probabilities of each target token and the end marker.
    pub fn forward_logprobs_encoded(&self, ex: &EncodedPair) -> Vec<f64> {
        let w = self.weights();
        let enc = self.encode(&w, &ex.src);
        self.decode_trace(&w, &enc, &ex.tgt).logp
    }

    pub fn forward_logprobs(&self, pair: &BitextPair) -> Vec<f64> {
        self.forward_logprobs_encoded(&self.encode_pair(pair))
    }

    /// Target distributions at each teacher-forced step (rows of length `|tgt vocab|`).
    pub fn step_distributions(&self, pair: &BitextPair) -> Vec<Vec<f64>> {
        let w = self.weights();
        let ex = self.encode_pair(pair);
        let enc = self.encode(&w, &ex.src);
        let tr = self.decode_trace(&w, &enc, &ex.tgt);
        tr.probs.chunks(self.tgt_vocab.len()).map(<[f64]>::to_vec).collect()
    }

    /// `-sum_t log p(y_t | y_<t, x)` including the end marker.
    pub fn sentence_loss(&self, pair: &BitextPair) -> f64 {
        -self.forward_logprobs(pair).iter().sum::<f64>()
    }

    pub fn sentence_loss_encoded(&self, ex: &EncodedPair) -> f64 {
        -self.forward_logprobs_encoded(ex).iter().sum::<f64>()
    }

    /// Mean token probability over the scored positions (end marker included).
    pub fn prediction_score_encoded(&self, ex: &EncodedPair, mean: ScoreMean) -> f64 {
        prediction_score_from_logprobs(&self.forward_logprobs_encoded(ex), mean)
    }

    pub fn prediction_score(&self, pair: &BitextPair, mean: ScoreMean) -> f64 {
        self.prediction_score_encoded(&self.encode_pair(pair), mean)
    }

    /// Sentence loss of `ex`; its gradient is added into `grad` (same layout as the parameters).
    pub fn loss_and_grad(&self, ex: &EncodedPair, grad: &mut [f64]) -> f64 {
        let layout = self.layout();
        let d = self.d;
        let vt = self.tgt_vocab.len();
        let w = self.weights();
        let mut g = split_mut(&layout, grad);
        let enc = self.encode(&w, &ex.src);
        let tr = self.decode_trace(&w, &enc, &ex.tgt);
        let l = enc.len();
        let steps = tr.targets.len();

        let mut d_states = vec![0.0; l * d];
        let mut d_keys = vec![0.0; l * d];
        let mut carry = vec![0.0; d];
        let mut next_carry = vec![0.0; d];
        let mut dlogits = vec![0.0; vt];
        let mut d_o = vec![0.0; d];
        let mut d_cat = vec![0.0; 2 * d];
        let mut cat = vec![0.0; 2 * d];
        let mut d_alpha = vec![0.0; l];
        let mut ds = vec![0.0; d];
        let mut sc = Scratch::new(d);

        for t in (0..steps).rev() {
            let s = &tr.gru.h[(t + 1) * d..(t + 2) * d];
            let o = &tr.o[t * d..(t + 1) * d];
            let ctx = &tr.ctx[t * d..(t + 1) * d];
            let alpha = &tr.alpha[t * l..(t + 1) * l];

            dlogits.copy_from_slice(&tr.probs[t * vt..(t + 1) * vt]);
            dlogits[tr.targets[t] as usize] -= 1.0;
            outer_acc(g.out_w, &dlogits, o);
            axpy(1.0, &dlogits, g.out_b);
            d_o.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_acc(w.out_w, &dlogits, &mut d_o);
            for i in 0..d {
                d_o[i] *= 1.0 - o[i] * o[i];
            }

            cat[..d].copy_from_slice(s);
            cat[d..].copy_from_slice(ctx);
            outer_acc(g.comb_w, &d_o, &cat);
            axpy(1.0, &d_o, g.comb_b);
            d_cat.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_acc(w.comb_w, &d_o, &mut d_cat);

            ds.copy_from_slice(&d_cat[..d]);
            axpy(1.0, &carry, &mut ds);
            let d_ctx = &d_cat[d..];

            let mut weighted = 0.0;
            for j in 0..l {
                d_alpha[j] = dot(d_ctx, enc.state(j, d));
                weighted += alpha[j] * d_alpha[j];
                axpy(alpha[j], d_ctx, &mut d_states[j * d..(j + 1) * d]);
            }
            for j in 0..l {
                let da = alpha[j] * (d_alpha[j] - weighted);
                if da != 0.0 {
                    axpy(da, &enc.keys[j * d..(j + 1) * d], &mut ds);
                    axpy(da, s, &mut d_keys[j * d..(j + 1) * d]);
                }
            }

            let y = tr.inputs[t] as usize;
            next_carry.iter_mut().for_each(|v| *v = 0.0);
            gru_step_back(
                &w.dec,
                &mut g.dec,
                d,
                &w.emb_tgt[y * d..(y + 1) * d],
                &tr.gru,
                t,
                &ds,
                &mut g.emb_tgt[y * d..(y + 1) * d],
                &mut next_carry,
                &mut sc,
            );
            std::mem::swap(&mut carry, &mut next_carry);
        }

        // The decoder starts from the last encoder state.
        axpy(1.0, &carry, &mut d_states[(l - 1) * d..l * d]);
        for j in 0..l {
            let h = enc.state(j, d);
            outer_acc(g.attn, &d_keys[j * d..(j + 1) * d], h);
            matvec_t_acc(w.attn, &d_keys[j * d..(j + 1) * d], &mut d_states[j * d..(j + 1) * d]);
        }

        carry.iter_mut().for_each(|v| *v = 0.0);
        let mut dh = vec![0.0; d];
        for j in (0..l).rev() {
            dh.copy_from_slice(&d_states[j * d..(j + 1) * d]);
            axpy(1.0, &carry, &mut dh);
            let x = enc.ids[j] as usize;
            next_carry.iter_mut().for_each(|v| *v = 0.0);
            gru_step_back(
                &w.enc,
                &mut g.enc,
                d,
                &w.emb_src[x * d..(x + 1) * d],
                &enc.gru,
                j,
                &dh,
                &mut g.emb_src[x * d..(x + 1) * d],
                &mut next_carry,
                &mut sc,
            );
            std::mem::swap(&mut carry, &mut next_carry);
        }

        -tr.logp.iter().sum::<f64>()
    }

    /// Argmax decoding until the end marker or `max_len` tokens. Padding and
    /// the begin marker are never emitted; ties go to the lowest id.
    pub fn translate_greedy_ids(&self, src: &[u32], max_len: usize) -> Vec<u32> {
        let d = self.d;
        let w = self.weights();
        let mut ids = src.to_vec();
        if ids.last() != Some(&EOS) {
            ids.push(EOS);
        }
        let enc = self.encode(&w, &ids);
        let mut gru = GruTrace::new(max_len + 1, d, enc.final_state(d));
        let mut sc = Scratch::new(d);
        let mut out = self.step_out(enc.len());
        let mut y = BOS;
        let mut result = Vec::new();
        for t in 0..max_len {
            let yi = y as usize;
            gru_step(&w.dec, d, &w.emb_tgt[yi * d..(yi + 1) * d], &mut gru, t, &mut sc);
            self.readout(&w, &enc, &gru.h[(t + 1) * d..(t + 2) * d], &mut out);
            let mut best = None::<(u32, f64)>;
            for (id, &p) in out.logits.iter().enumerate() {
                let id = id as u32;
                if id == PAD || id == BOS {
                    continue;
                }
                if best.is_none_or(|(_, bp)| p > bp) {
                    best = Some((id, p));
                }
            }
            y = best.expect("target vocabulary has regular ids").0;
            if y == EOS {
                break;
            }
            result.push(y);
        }
        result
    }

    pub fn translate_greedy(&self, src: &[String], max_len: usize) -> Result<Vec<String>> {
        if max_len == 0 {
            return Err(Error::invalid("max_len must be >= 1"));
        }
        let ids = self.translate_greedy_ids(&self.src_vocab.encode(src), max_len);
        Ok(self.tgt_vocab.decode(&ids))
    }
}

pub fn prediction_score_from_logprobs(logprobs: &[f64], mean: ScoreMean) -> f64 {
    let n = logprobs.len() as f64;
    match mean {
        ScoreMean::Arithmetic => logprobs.iter().map(|lp| lp.exp()).sum::<f64>() / n,
        ScoreMean::Geometric => (logprobs.iter().sum::<f64>() / n).exp(),
    }
}
