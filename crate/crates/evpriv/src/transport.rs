//! Split inference over TCP, one thread per provider session.

use std::io::{self, ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use evpriv_core::events::{FrameImage, VoxelGrid};
use evpriv_core::split::wire::{frame_len, HEADER_LEN};
use evpriv_core::split::{ClientEnds, ErrorCode, Message, MiddleService, Session, SessionStep};

use crate::error::{Error, Result};

/// Idle time after which a session is dropped.
pub const READ_TIMEOUT: Duration = Duration::from_secs(60);

enum FrameRead {
    Frame(Vec<u8>),
    Closed,
    /// The header was invalid; the stream cannot be resynchronized.
    Malformed(String),
}

fn read_frame(stream: &mut impl Read) -> io::Result<FrameRead> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        match stream.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(FrameRead::Closed),
            Ok(0) => return Err(io::Error::new(ErrorKind::UnexpectedEof, "truncated frame header")),
            Ok(n) => got += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let total = match frame_len(&header) {
        Ok(n) => n,
        Err(e) => return Ok(FrameRead::Malformed(e.to_string())),
    };
    let mut frame = vec![0u8; total];
    frame[..HEADER_LEN].copy_from_slice(&header);
    stream.read_exact(&mut frame[HEADER_LEN..])?;
    Ok(FrameRead::Frame(frame))
}

fn send(stream: &mut TcpStream, msg: &Message) -> io::Result<()> {
    stream.write_all(&msg.encode())?;
    stream.flush()
}

/// Runs one provider session to completion.
pub fn handle_session(mut stream: TcpStream, service: &MiddleService) -> io::Result<()> {
    stream.set_read_timeout(Some(READ_TIMEOUT))?;
    stream.set_nodelay(true)?;
    let mut session = Session::new(service);
    loop {
        let step = match read_frame(&mut stream)? {
            FrameRead::Closed => return Ok(()),
            FrameRead::Malformed(m) => {
                SessionStep::ReplyAndClose(Message::Error { code: ErrorCode::Malformed, message: m })
            }
            FrameRead::Frame(f) => session.on_frame(&f),
        };
        match step {
            SessionStep::Reply(m) => send(&mut stream, &m)?,
            SessionStep::ReplyAndClose(m) => {
                if let Message::Error { code, message } = &m {
                    log::warn!("closing session with {code:?}: {message}");
                }
                send(&mut stream, &m)?;
                return Ok(());
            }
            SessionStep::Close => return Ok(()),
        }
    }
}

/// Accepts sessions until `stop` is set or `max_sessions` have started.
pub fn serve(listener: TcpListener, service: Arc<MiddleService>, max_sessions: Option<usize>, stop: Arc<AtomicBool>) -> Result<()> {
    let mut workers: Vec<JoinHandle<()>> = Vec::new();
    let mut started = 0usize;
    for conn in listener.incoming() {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        let stream = match conn {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let service = Arc::clone(&service);
        workers.push(thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            if let Err(e) = handle_session(stream, &service) {
                log::warn!("session {peer:?} ended: {e}");
            }
        }));
        workers.retain(|w| !w.is_finished());
        started += 1;
        if max_sessions.is_some_and(|m| started >= m) {
            break;
        }
    }
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}

/// A provider running on a background thread.
pub struct Server {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<Result<()>>>,
}

impl Server {
    pub fn spawn(addr: impl ToSocketAddrs, service: MiddleService) -> Result<Server> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let service = Arc::new(service);
        let handle = thread::spawn(move || serve(listener, service, None, flag));
        Ok(Server { addr, stop, handle: Some(handle) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting and waits for running sessions.
    pub fn shutdown(mut self) -> Result<()> {
        self.stop_and_join()
    }

    fn stop_and_join(&mut self) -> Result<()> {
        let Some(handle) = self.handle.take() else { return Ok(()) };
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = TcpStream::connect(self.addr);
        handle.join().map_err(|_| Error::Runtime("server thread panicked".into()))?
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.stop_and_join();
    }
}

/// The client side of one session.
pub struct SplitClient {
    stream: TcpStream,
    ends: ClientEnds,
}

fn expect_reply(stream: &mut TcpStream) -> Result<Message> {
    match read_frame(stream)? {
        FrameRead::Frame(f) => match Message::decode(&f)? {
            Message::Error { code, message } => Err(Error::Remote { code, message }),
            m => Ok(m),
        },
        FrameRead::Closed => Err(Error::Protocol("provider closed the connection".into())),
        FrameRead::Malformed(m) => Err(Error::Protocol(m)),
    }
}

impl SplitClient {
    /// Connects and performs the HELLO exchange.
    pub fn connect(addr: impl ToSocketAddrs, ends: ClientEnds) -> Result<Self> {
        let mut stream = TcpStream::connect(addr)?;
        stream.set_read_timeout(Some(READ_TIMEOUT))?;
        stream.set_nodelay(true)?;
        send(&mut stream, &Message::Hello(ends.hello()))?;
        match expect_reply(&mut stream)? {
            Message::Hello(h) => ends.accept_hello(&h)?,
            m => return Err(Error::Protocol(format!("expected HELLO, received {:?}", m.kind()))),
        }
        Ok(SplitClient { stream, ends })
    }

    /// Frontal part locally, middle part remotely, rear part locally.
    pub fn reconstruct(&mut self, grid: &VoxelGrid) -> Result<FrameImage> {
        let up = self.ends.prepare(grid)?;
        send(&mut self.stream, &Message::ActUp(up))?;
        match expect_reply(&mut self.stream)? {
            Message::ActDown(t) => Ok(self.ends.finish(&t)?),
            m => Err(Error::Protocol(format!("expected ACT_DOWN, received {:?}", m.kind()))),
        }
    }

    /// Sends raw bytes, for exercising the provider's error paths.
    pub fn send_raw(&mut self, bytes: &[u8]) -> Result<Message> {
        self.stream.write_all(bytes)?;
        expect_reply(&mut self.stream)
    }

    pub fn close(mut self) -> Result<()> {
        send(&mut self.stream, &Message::Bye)?;
        Ok(())
    }
}

/// One reconstruction over a fresh session.
pub fn client_reconstruct(ends: ClientEnds, grid: &VoxelGrid, addr: impl ToSocketAddrs) -> Result<FrameImage> {
    let mut client = SplitClient::connect(addr, ends)?;
    let img = client.reconstruct(grid)?;
    client.close()?;
    Ok(img)
}
