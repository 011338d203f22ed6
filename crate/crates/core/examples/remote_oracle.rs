//! Serves a builtin model over TCP on a background thread and explains an
//! image through the wire protocol, checking the result against an
//! in-process run.

use std::io::BufReader;
use std::net::TcpListener;
use std::thread;

use rex_core::bridge::{serve, Endpoint, RemoteClassifier, ServeOptions};
use rex_core::domain::{Config, Image, MaskColor};
use rex_core::engine::explain;
use rex_core::oracle::{Oracle, SyntheticClassifier};

fn main() -> rex_core::Result<()> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?.to_string();
    thread::spawn(move || {
        let (stream, _) = listener.accept().expect("client connects");
        let reader = BufReader::new(stream.try_clone().expect("socket clones"));
        serve(&SyntheticClassifier::LinearFixture, &ServeOptions::new(2), reader, stream).expect("session ends cleanly");
    });

    let x = Image::from_fn(8, 8, 1, |r, c, _| ((r * 8 + c) % 7) as f32 / 7.0)?;
    let cfg = Config {
        iterations: 8,
        mask_color: MaskColor::black(1),
        ..Config::default()
    };
    let remote = Oracle::new(RemoteClassifier::connect(&Endpoint::Tcp(addr.clone()))?, u64::MAX);
    let over_wire = explain(&remote, &x, &cfg, 2)?;
    let local = explain(&Oracle::unlimited(SyntheticClassifier::LinearFixture), &x, &cfg, 1)?;
    println!("tcp:{addr} label={} confidence={:.4} calls={}", over_wire.label, over_wire.confidence, over_wire.ledger.calls_made);
    println!("identical to in-process run: {}", over_wire.map == local.map && over_wire.explanation == local.explanation);
    Ok(())
}
