//! Serves any [`Classifier`] over the wire protocol.
//!
//! Used by `rex serve` and by tests that need a real peer for the client.

use std::io::{self, BufRead, Write};

use super::protocol::{to_line, ClientRecord, ErrorResponse, Hello, ImageResponse, Welcome, PROTOCOL_VERSION};
use crate::domain::Image;
use crate::oracle::Classifier;

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub classes: u32,
    /// Version announced in the handshake.
    pub version: u32,
    /// Close the connection after answering this many images, mid-batch if
    /// need be. Fault-injection aid.
    pub fail_after: Option<usize>,
}

impl ServeOptions {
    pub fn new(classes: u32) -> Self {
        Self {
            classes,
            version: PROTOCOL_VERSION,
            fail_after: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub images: usize,
    pub batches: usize,
    pub errors: usize,
}

/// Answers requests until the client closes its side.
pub fn serve<R: BufRead, W: Write>(
    classifier: &dyn Classifier,
    opts: &ServeOptions,
    reader: R,
    mut writer: W,
) -> io::Result<ServeStats> {
    let mut lines = reader.lines();
    let mut stats = ServeStats::default();
    let Some(first) = lines.next().transpose()? else {
        return Ok(stats);
    };
    let welcome = match serde_json::from_str::<Hello>(&first) {
        Ok(_) => Welcome {
            rex_proto: opts.version,
            classes: Some(opts.classes),
            error: None,
        },
        Err(e) => Welcome {
            rex_proto: opts.version,
            classes: None,
            error: Some(format!("bad handshake: {e}")),
        },
    };
    writer.write_all(to_line(&welcome).as_bytes())?;
    writer.flush()?;

    let mut pending: Vec<(u64, Image)> = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ClientRecord>(&line) {
            Ok(ClientRecord::Image(req)) => match req.to_image() {
                Ok(img) => pending.push((req.id, img)),
                Err(e) => reject(&mut writer, &mut stats, Some(req.id), e)?,
            },
            Ok(ClientRecord::BatchEnd(_)) => {
                let batch = std::mem::take(&mut pending);
                let images: Vec<Image> = batch.iter().map(|(_, img)| img.clone()).collect();
                match classifier.classify_batch(&images) {
                    Ok(results) => {
                        for ((id, _), c) in batch.iter().zip(&results) {
                            if opts.fail_after == Some(stats.images) {
                                return Ok(stats);
                            }
                            writer.write_all(to_line(&ImageResponse::new(*id, c)).as_bytes())?;
                            stats.images += 1;
                        }
                    }
                    Err(e) => {
                        for (id, _) in &batch {
                            reject(&mut writer, &mut stats, Some(*id), e.to_string())?;
                        }
                    }
                }
                stats.batches += 1;
                writer.flush()?;
            }
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(serde_json::Value::as_u64));
                reject(&mut writer, &mut stats, id, format!("malformed request: {e}"))?;
                writer.flush()?;
            }
        }
    }
    Ok(stats)
}

fn reject<W: Write>(writer: &mut W, stats: &mut ServeStats, id: Option<u64>, error: String) -> io::Result<()> {
    stats.errors += 1;
    writer.write_all(to_line(&ErrorResponse { id, error }).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::protocol::{to_line, BatchEnd, ImageRequest};
    use crate::oracle::SyntheticClassifier;

    fn session(input: &str, opts: &ServeOptions) -> (String, ServeStats) {
        let mut out = Vec::new();
        let stats = serve(&SyntheticClassifier::constant(1), opts, input.as_bytes(), &mut out).unwrap();
        (String::from_utf8(out).unwrap(), stats)
    }

    #[test]
    fn answers_a_batch() {
        let img = Image::filled(1, 2, 1, 0.5).unwrap();
        let input = format!(
            "{}{}{}{}",
            to_line(&Hello { rex_proto: 1 }),
            to_line(&ImageRequest::new(0, &img)),
            to_line(&ImageRequest::new(1, &img)),
            to_line(&BatchEnd { batch_end: 1 })
        );
        let (out, stats) = session(&input, &ServeOptions::new(2));
        assert_eq!(
            out,
            "{\"rex_proto\":1,\"classes\":2}\n\
             {\"id\":0,\"label\":1,\"confidence\":1.0}\n\
             {\"id\":1,\"label\":1,\"confidence\":1.0}\n"
        );
        assert_eq!(stats, ServeStats { images: 2, batches: 1, errors: 0 });
    }

    #[test]
    fn malformed_line_echoes_id_and_keeps_going() {
        let img = Image::filled(1, 1, 1, 0.5).unwrap();
        let input = format!(
            "{{\"rex_proto\":1}}\n{{\"id\":7,\"shape\":[1,1,1],\"data\":\"!!\"}}\n{{\"id\":8,\"oops\":true}}\nnot json\n{}{}",
            to_line(&ImageRequest::new(9, &img)),
            to_line(&BatchEnd { batch_end: 9 })
        );
        let (out, stats) = session(&input, &ServeOptions::new(2));
        let lines: Vec<&str> = out.lines().collect();
        assert!(lines[1].starts_with("{\"id\":7,\"error\":"));
        assert!(lines[2].starts_with("{\"id\":8,\"error\":"));
        assert!(lines[3].starts_with("{\"id\":null,\"error\":"));
        assert_eq!(lines[4], "{\"id\":9,\"label\":1,\"confidence\":1.0}");
        assert_eq!(stats.errors, 3);
    }

    #[test]
    fn fail_after_cuts_the_batch() {
        let img = Image::filled(1, 1, 1, 0.5).unwrap();
        let mut input = to_line(&Hello { rex_proto: 1 });
        for id in 0..4 {
            input.push_str(&to_line(&ImageRequest::new(id, &img)));
        }
        input.push_str(&to_line(&BatchEnd { batch_end: 3 }));
        let opts = ServeOptions {
            fail_after: Some(2),
            ..ServeOptions::new(2)
        };
        let (out, stats) = session(&input, &opts);
        assert_eq!(out.lines().count(), 3);
        assert_eq!(stats.images, 2);
    }
}
