//! `NET1` network parameters: magic, u32 layer count, per layer u32 Cin,
//! u32 Cout, u8 activation tag, `Cout*Cin*9` f32 kernel values and `Cout`
//! f32 biases, then two u32 split points.
//!
//! The same container holds the parts handed to each party. A middle-part
//! file uses the split points `(0, n)`; a client file holds the frontal
//! layers followed by the rear layers with both split points at the number
//! of frontal layers.

use evpriv_core::recon::{Activation, ConvLayer, ConvNet, Part};

use super::{Reader, Writer};
use crate::error::{Error, Result};

pub const NET_MAGIC: [u8; 4] = *b"NET1";

#[derive(Debug, Clone, PartialEq)]
pub struct NetFile {
    pub layers: Vec<ConvLayer<f32>>,
    pub split: (u32, u32),
}

/// What a `NET1` file contains, judged by its split points.
#[derive(Debug, Clone, PartialEq)]
pub enum NetContents {
    Full(ConvNet<f32>),
    Middle(Vec<ConvLayer<f32>>),
    Ends { frontal: Vec<ConvLayer<f32>>, rear: Vec<ConvLayer<f32>> },
}

impl NetFile {
    pub fn full(net: &ConvNet<f32>) -> Self {
        let (a, b) = net.split();
        NetFile { layers: net.layers().to_vec(), split: (a as u32, b as u32) }
    }

    pub fn middle(net: &ConvNet<f32>) -> Self {
        let layers = net.part(Part::Middle).to_vec();
        let n = layers.len() as u32;
        NetFile { layers, split: (0, n) }
    }

    pub fn ends(net: &ConvNet<f32>) -> Self {
        let mut layers = net.part(Part::Frontal).to_vec();
        let s = layers.len() as u32;
        layers.extend_from_slice(net.part(Part::Rear));
        NetFile { layers, split: (s, s) }
    }

    pub fn contents(self) -> Result<NetContents> {
        let n = self.layers.len() as u32;
        let (a, b) = self.split;
        if a == 0 && b == n {
            return Ok(NetContents::Middle(self.layers));
        }
        if a == b && a > 0 && a < n {
            let mut frontal = self.layers;
            let rear = frontal.split_off(a as usize);
            return Ok(NetContents::Ends { frontal, rear });
        }
        ConvNet::new(self.layers, (a as usize, b as usize))
            .map(NetContents::Full)
            .map_err(|e| Error::format(format!("NET1: {e}")))
    }

    pub fn into_full(self) -> Result<ConvNet<f32>> {
        match self.contents()? {
            NetContents::Full(n) => Ok(n),
            _ => Err(Error::format("NET1: expected a complete network, found a partial one")),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(&NET_MAGIC);
        w.len_u32(self.layers.len())?;
        for l in &self.layers {
            w.len_u32(l.c_in)?;
            w.len_u32(l.c_out)?;
            w.u8(l.activation.tag());
            for &v in l.kernel.iter().chain(&l.bias) {
                w.f32(v);
            }
        }
        w.u32(self.split.0);
        w.u32(self.split.1);
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "NET1");
        r.expect_magic(&NET_MAGIC)?;
        let n = r.count(9)?;
        let mut layers = Vec::with_capacity(n);
        for i in 0..n {
            let (c_in, c_out) = (r.u32()? as usize, r.u32()? as usize);
            let tag = r.u8()?;
            let activation = Activation::from_tag(tag)
                .ok_or_else(|| Error::format(format!("NET1: layer {i} has unknown activation {tag}")))?;
            let nk = c_out
                .checked_mul(c_in)
                .and_then(|v| v.checked_mul(9))
                .ok_or_else(|| Error::format("NET1: layer size overflows"))?;
            r.check_room(nk + c_out, 4)?;
            let kernel = (0..nk).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
            let bias = (0..c_out).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
            if !kernel.iter().chain(&bias).all(|v| v.is_finite()) {
                return Err(Error::format(format!("NET1: layer {i} has non-finite parameters")));
            }
            layers.push(ConvLayer { c_in, c_out, kernel, bias, activation });
        }
        let split = (r.u32()?, r.u32()?);
        r.finish()?;
        for (i, pair) in layers.windows(2).enumerate() {
            // A client file joins frontal and rear parts, which need not chain.
            if pair[0].c_out != pair[1].c_in && !(split.0 == split.1 && i + 1 == split.0 as usize) {
                return Err(Error::format(format!("NET1: layers {i} and {} do not chain", i + 1)));
            }
        }
        Ok(NetFile { layers, split })
    }
}
