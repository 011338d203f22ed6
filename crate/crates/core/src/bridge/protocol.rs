//! Wire records: one JSON object per line.
//!
//! ```text
//! client: {"rex_proto":1}
//! server: {"rex_proto":1,"classes":K}
//! client: {"id":0,"shape":[h,w,c],"data":"<base64 f32 LE>"}   (one per image)
//! client: {"batch_end":0}                                     (id of the last image)
//! server: {"id":0,"label":L,"confidence":C,"scores":[...]}    (one per image)
//! server: {"id":0,"error":"..."}                              (rejected request)
//! ```

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::domain::Image;
use crate::oracle::{Classification, Label, OracleError};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub rex_proto: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Welcome {
    pub rex_proto: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRequest {
    pub id: u64,
    pub shape: [usize; 3],
    pub data: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEnd {
    pub batch_end: u64,
}

/// A client line after the handshake.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ClientRecord {
    Image(ImageRequest),
    BatchEnd(BatchEnd),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResponse {
    pub id: u64,
    pub label: Label,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub id: Option<u64>,
    pub error: String,
}

/// A server line after the handshake.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ServerRecord {
    Result(ImageResponse),
    Error(ErrorResponse),
}

pub fn encode_data(values: &[f32]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

pub fn decode_data(text: &str) -> Result<Vec<f32>, String> {
    let bytes = STANDARD.decode(text).map_err(|e| format!("base64: {e}"))?;
    if bytes.len() % 4 != 0 {
        return Err(format!("{} data bytes is not a whole number of f32 values", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

impl ImageRequest {
    pub fn new(id: u64, img: &Image) -> Self {
        Self {
            id,
            shape: [img.height(), img.width(), img.channels()],
            data: encode_data(img.data()),
        }
    }

    pub fn to_image(&self) -> Result<Image, String> {
        let [h, w, c] = self.shape;
        Image::new(h, w, c, decode_data(&self.data)?).map_err(|e| e.to_string())
    }
}

impl ImageResponse {
    pub fn new(id: u64, c: &Classification) -> Self {
        Self {
            id,
            label: c.label,
            confidence: c.confidence,
            scores: c.full_scores.clone(),
        }
    }

    pub fn into_classification(self) -> Result<Classification, OracleError> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(OracleError::Malformed(format!(
                "confidence {} for id {} outside [0, 1]",
                self.confidence, self.id
            )));
        }
        Ok(Classification {
            label: self.label,
            confidence: self.confidence,
            full_scores: self.scores,
        })
    }
}

/// Serializes a record as one line, newline included.
pub fn to_line<T: Serialize>(record: &T) -> String {
    let mut s = serde_json::to_string(record).expect("wire records always serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_round_trips_bit_exactly() {
        let values = [0.0f32, 1.0, 0.1, 1.0 / 3.0, f32::MIN_POSITIVE];
        assert_eq!(decode_data(&encode_data(&values)).unwrap(), values);
        assert_eq!(encode_data(&[1.0]), "AACAPw==");
        assert!(decode_data("AACA").is_err());
    }

    #[test]
    fn record_shapes() {
        assert_eq!(to_line(&Hello { rex_proto: 1 }), "{\"rex_proto\":1}\n");
        let welcome = Welcome {
            rex_proto: 1,
            classes: Some(2),
            error: None,
        };
        assert_eq!(to_line(&welcome), "{\"rex_proto\":1,\"classes\":2}\n");
        let img = Image::new(1, 1, 1, vec![1.0]).unwrap();
        assert_eq!(
            to_line(&ImageRequest::new(3, &img)),
            "{\"id\":3,\"shape\":[1,1,1],\"data\":\"AACAPw==\"}\n"
        );
        assert_eq!(to_line(&BatchEnd { batch_end: 3 }), "{\"batch_end\":3}\n");
    }

    #[test]
    fn client_and_server_records_are_distinguished() {
        let r: ClientRecord = serde_json::from_str("{\"batch_end\":4}").unwrap();
        assert_eq!(r, ClientRecord::BatchEnd(BatchEnd { batch_end: 4 }));
        let r: ServerRecord = serde_json::from_str("{\"id\":1,\"label\":2,\"confidence\":0.5}").unwrap();
        assert!(matches!(r, ServerRecord::Result(ImageResponse { id: 1, label: 2, scores: None, .. })));
        let r: ServerRecord = serde_json::from_str("{\"id\":1,\"error\":\"bad\"}").unwrap();
        assert!(matches!(r, ServerRecord::Error(_)));
    }
}
