//! Transport endpoints: in-memory queues and TCP sockets behind one
//! interface, with byte accounting and optional capture of everything that
//! crosses the endpoint (used to audit what the server observes).

use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};

use crate::error::{ProtocolError, Result};
use crate::wire::{decode_frame, encode_frame, read_frame, Message};

/// Byte-level frame transport. Implementations move whole frames.
pub trait FrameTransport: Send {
    fn send_frame(&mut self, frame: &[u8]) -> Result<()>;
    fn recv_frame(&mut self) -> Result<Vec<u8>>;
}

struct MemTransport {
    tx: mpsc::Sender<Vec<u8>>,
    rx: mpsc::Receiver<Vec<u8>>,
}

impl FrameTransport for MemTransport {
    fn send_frame(&mut self, frame: &[u8]) -> Result<()> {
        self.tx
            .send(frame.to_vec())
            .map_err(|_| ProtocolError::Wire("peer hung up".into()))
    }

    fn recv_frame(&mut self) -> Result<Vec<u8>> {
        self.rx
            .recv()
            .map_err(|_| ProtocolError::Wire("peer hung up".into()))
    }
}

struct TcpTransport {
    stream: TcpStream,
}

impl FrameTransport for TcpTransport {
    fn send_frame(&mut self, frame: &[u8]) -> Result<()> {
        self.stream.write_all(frame)?;
        self.stream.flush()?;
        Ok(())
    }

    fn recv_frame(&mut self) -> Result<Vec<u8>> {
        read_frame(&mut self.stream)
    }
}

/// A message endpoint over some transport, counting bytes in both
/// directions and optionally logging every frame byte it sees.
pub struct Endpoint {
    transport: Box<dyn FrameTransport>,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    capture: Option<Arc<Mutex<Vec<u8>>>>,
}

impl Endpoint {
    fn new(transport: Box<dyn FrameTransport>) -> Self {
        Self {
            transport,
            bytes_sent: 0,
            bytes_received: 0,
            capture: None,
        }
    }

    /// Mirrors every frame (sent and received) into the shared buffer.
    pub fn set_capture(&mut self, log: Arc<Mutex<Vec<u8>>>) {
        self.capture = Some(log);
    }

    pub fn send(&mut self, msg: &Message) -> Result<()> {
        let frame = encode_frame(msg);
        self.bytes_sent += frame.len() as u64;
        if let Some(log) = &self.capture {
            log.lock().unwrap().extend_from_slice(&frame);
        }
        self.transport.send_frame(&frame)
    }

    /// Receives one raw frame (blocking); lets callers time the decode
    /// separately from the wait.
    pub fn recv_raw(&mut self) -> Result<Vec<u8>> {
        let frame = self.transport.recv_frame()?;
        self.bytes_received += frame.len() as u64;
        if let Some(log) = &self.capture {
            log.lock().unwrap().extend_from_slice(&frame);
        }
        Ok(frame)
    }

    pub fn recv(&mut self) -> Result<Message> {
        let frame = self.recv_raw()?;
        decode_frame(&frame)
    }
}

/// Connected pair of in-memory endpoints.
pub fn mem_duplex() -> (Endpoint, Endpoint) {
    let (tx_a, rx_b) = mpsc::channel();
    let (tx_b, rx_a) = mpsc::channel();
    (
        Endpoint::new(Box::new(MemTransport { tx: tx_a, rx: rx_a })),
        Endpoint::new(Box::new(MemTransport { tx: tx_b, rx: rx_b })),
    )
}

/// Connected pair of loopback TCP endpoints (one frame per send, ordered,
/// single connection).
pub fn tcp_duplex() -> Result<(Endpoint, Endpoint)> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let client = TcpStream::connect(addr)?;
    let (server, _) = listener.accept()?;
    client.set_nodelay(true)?;
    server.set_nodelay(true)?;
    Ok((
        Endpoint::new(Box::new(TcpTransport { stream: server })),
        Endpoint::new(Box::new(TcpTransport { stream: client })),
    ))
}
