//! Transport-independent halves of a split-inference session.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::wire::{ErrorCode, Hello, Message};
use crate::error::{Error, Result};
use crate::events::{FrameImage, VoxelGrid};
use crate::recon::{infuse, run_layers, ConvLayer, ConvNet, NoiseWatermark, Part, Tensor};

fn check_chain(layers: &[ConvLayer<f32>]) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::Empty("layer chain"));
    }
    for pair in layers.windows(2) {
        if pair[0].c_out != pair[1].c_in {
            return Err(crate::error::shape_err(pair[0].c_out, pair[1].c_in));
        }
    }
    Ok(())
}

/// The provider side: evaluates the middle part on received activations.
#[derive(Debug, Clone, PartialEq)]
pub struct MiddleService {
    layers: Vec<ConvLayer<f32>>,
}

impl MiddleService {
    pub fn new(layers: Vec<ConvLayer<f32>>) -> Result<Self> {
        check_chain(&layers)?;
        Ok(MiddleService { layers })
    }

    pub fn from_net(net: &ConvNet<f32>) -> Self {
        MiddleService { layers: net.part(Part::Middle).to_vec() }
    }

    pub fn layers(&self) -> &[ConvLayer<f32>] {
        &self.layers
    }

    pub fn hello(&self) -> Hello {
        Hello {
            up_channels: self.layers[0].c_in as u32,
            down_channels: self.layers[self.layers.len() - 1].c_out as u32,
        }
    }

    pub fn run(&self, activation: &Tensor<f32>) -> Result<Tensor<f32>> {
        run_layers(&self.layers, activation)
    }
}

/// What the transport should do after a message.
#[derive(Debug, Clone, PartialEq)]
pub enum SessionStep {
    Reply(Message),
    /// Send the message, then close the connection.
    ReplyAndClose(Message),
    Close,
}

fn fail(code: ErrorCode, message: String) -> SessionStep {
    SessionStep::ReplyAndClose(Message::Error { code, message })
}

/// Provider state for one connection. A session starts with a HELLO
/// exchange, then answers every ACT_UP with an ACT_DOWN until BYE.
#[derive(Debug)]
pub struct Session<'a> {
    service: &'a MiddleService,
    greeted: bool,
}

impl<'a> Session<'a> {
    pub fn new(service: &'a MiddleService) -> Self {
        Session { service, greeted: false }
    }

    pub fn on_frame(&mut self, frame: &[u8]) -> SessionStep {
        match Message::decode(frame) {
            Ok(msg) => self.on_message(msg),
            Err(e) => fail(ErrorCode::Malformed, format!("{e}")),
        }
    }

    pub fn on_message(&mut self, msg: Message) -> SessionStep {
        let ours = self.service.hello();
        match (msg, self.greeted) {
            (Message::Hello(theirs), false) => {
                if theirs != ours {
                    return fail(
                        ErrorCode::Shape,
                        format!(
                            "provider expects {} channels up and returns {}, client announced {} and {}",
                            ours.up_channels, ours.down_channels, theirs.up_channels, theirs.down_channels
                        ),
                    );
                }
                self.greeted = true;
                SessionStep::Reply(Message::Hello(ours))
            }
            (Message::ActUp(act), true) => {
                if act.channels != ours.up_channels as usize {
                    return fail(
                        ErrorCode::Shape,
                        format!("expected {} channels, received {}", ours.up_channels, act.channels),
                    );
                }
                match self.service.run(&act) {
                    Ok(out) => SessionStep::Reply(Message::ActDown(out)),
                    Err(e) => fail(ErrorCode::Internal, format!("{e}")),
                }
            }
            (Message::Bye, _) => SessionStep::Close,
            (other, greeted) => fail(
                ErrorCode::Unexpected,
                format!("unexpected {:?} message (handshake done: {greeted})", other.kind()),
            ),
        }
    }
}

/// The client side: frontal and rear parts plus the private watermark.
#[derive(Debug, Clone)]
pub struct ClientEnds {
    frontal: Vec<ConvLayer<f32>>,
    rear: Vec<ConvLayer<f32>>,
    watermark: NoiseWatermark,
}

impl ClientEnds {
    pub fn new(frontal: Vec<ConvLayer<f32>>, rear: Vec<ConvLayer<f32>>, watermark: NoiseWatermark) -> Result<Self> {
        check_chain(&frontal)?;
        check_chain(&rear)?;
        if watermark.shape().0 != frontal[0].c_in {
            return Err(crate::error::shape_err(frontal[0].c_in, watermark.shape().0));
        }
        Ok(ClientEnds { frontal, rear, watermark })
    }

    pub fn from_net(net: &ConvNet<f32>, watermark: NoiseWatermark) -> Result<Self> {
        Self::new(net.part(Part::Frontal).to_vec(), net.part(Part::Rear).to_vec(), watermark)
    }

    pub fn hello(&self) -> Hello {
        Hello {
            up_channels: self.frontal[self.frontal.len() - 1].c_out as u32,
            down_channels: self.rear[0].c_in as u32,
        }
    }

    /// Checks the provider's HELLO against the client's own.
    pub fn accept_hello(&self, theirs: &Hello) -> Result<()> {
        let ours = self.hello();
        if *theirs != ours {
            return Err(crate::error::shape_err(
                (ours.up_channels, ours.down_channels),
                (theirs.up_channels, theirs.down_channels),
            ));
        }
        Ok(())
    }

    /// Infuses the watermark and runs the frontal part.
    pub fn prepare(&self, grid: &VoxelGrid) -> Result<Tensor<f32>> {
        let infused = infuse(grid, &self.watermark)?;
        run_layers(&self.frontal, &Tensor::from_voxel(&infused))
    }

    /// Runs the rear part on the provider's reply.
    pub fn finish(&self, activation: &Tensor<f32>) -> Result<FrameImage> {
        run_layers(&self.rear, activation)?.to_image()
    }
}
