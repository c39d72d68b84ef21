//! Checkpoint file format: a human-readable header (format version,
//! architecture, shapes, class count, seed, layer table) followed by
//! little-endian 32-bit float weight blobs in declared layer order.

use std::io::{Read, Write};
use std::path::Path;

use crate::classifiers::reference::ReferenceCnn;
use crate::error::{Error, Result};

const MAGIC: &str = "assistive-checkpoint";
const FORMAT_VERSION: u32 = 1;
const ARCHITECTURE: &str = "reference_cnn_v1";

/// Serialize a [`ReferenceCnn`] to `path`. `load_checkpoint(save_checkpoint(c))`
/// reproduces `predict_probs` bit-identically.
pub fn save_checkpoint(model: &ReferenceCnn, path: &Path) -> Result<()> {
    use crate::classifiers::DifferentiableClassifier;
    let (h, w) = model.input_shape();
    let mut header = String::new();
    header.push_str(&format!("{MAGIC} v{FORMAT_VERSION}\n"));
    header.push_str(&format!("architecture={ARCHITECTURE}\n"));
    header.push_str(&format!("name={}\n", model.identity()));
    header.push_str(&format!("input_height={h}\n"));
    header.push_str(&format!("input_width={w}\n"));
    header.push_str(&format!("num_classes={}\n", model.num_classes()));
    header.push_str(&format!("seed={}\n", model.seed()));
    for (name, blob) in model.layer_blobs() {
        header.push_str(&format!("layer={name}:f32:{}\n", blob.len()));
    }
    header.push_str("blob\n");

    let mut file = std::fs::File::create(path)?;
    file.write_all(header.as_bytes())?;
    for (_, blob) in model.layer_blobs() {
        for v in blob {
            file.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Deserialize a checkpoint. Malformed files produce a format error naming
/// the offending field; no partial model is ever returned.
pub fn load_checkpoint(path: &Path) -> Result<ReferenceCnn> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;

    let blob_marker = b"\nblob\n";
    let marker_pos = find(&bytes, blob_marker)
        .ok_or_else(|| Error::Format("missing 'blob' section marker".into()))?;
    let header = std::str::from_utf8(&bytes[..marker_pos])
        .map_err(|_| Error::Format("header: not valid utf-8".into()))?;
    let blob = &bytes[marker_pos + blob_marker.len()..];

    let mut lines = header.lines();
    let magic = lines.next().unwrap_or_default();
    if magic != format!("{MAGIC} v{FORMAT_VERSION}") {
        return Err(Error::Format(format!("magic: unrecognized '{magic}'")));
    }

    let mut architecture = None;
    let mut name = None;
    let mut height = None;
    let mut width = None;
    let mut num_classes = None;
    let mut seed = None;
    let mut layers: Vec<(String, usize)> = Vec::new();

    for line in lines {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("header line '{line}': missing '='")))?;
        match key {
            "architecture" => architecture = Some(value.to_string()),
            "name" => name = Some(value.to_string()),
            "input_height" => height = Some(parse_usize("input_height", value)?),
            "input_width" => width = Some(parse_usize("input_width", value)?),
            "num_classes" => num_classes = Some(parse_usize("num_classes", value)?),
            "seed" => {
                seed = Some(
                    value
                        .parse::<u64>()
                        .map_err(|_| Error::Format(format!("seed: invalid '{value}'")))?,
                )
            }
            "layer" => {
                let mut parts = value.split(':');
                let lname = parts
                    .next()
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| Error::Format(format!("layer: missing name in '{value}'")))?;
                let dtype = parts
                    .next()
                    .ok_or_else(|| Error::Format(format!("layer {lname}: missing dtype")))?;
                if dtype != "f32" {
                    return Err(Error::Format(format!(
                        "layer {lname}: unsupported dtype '{dtype}'"
                    )));
                }
                let count = parts
                    .next()
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| Error::Format(format!("layer {lname}: invalid count")))?;
                layers.push((lname.to_string(), count));
            }
            other => return Err(Error::Format(format!("unknown header field '{other}'"))),
        }
    }

    let architecture =
        architecture.ok_or_else(|| Error::Format("architecture: missing".into()))?;
    if architecture != ARCHITECTURE {
        return Err(Error::Format(format!(
            "architecture: unsupported '{architecture}'"
        )));
    }
    let name = name.ok_or_else(|| Error::Format("name: missing".into()))?;
    let height = height.ok_or_else(|| Error::Format("input_height: missing".into()))?;
    let width = width.ok_or_else(|| Error::Format("input_width: missing".into()))?;
    let num_classes = num_classes.ok_or_else(|| Error::Format("num_classes: missing".into()))?;
    let seed = seed.ok_or_else(|| Error::Format("seed: missing".into()))?;

    let expected_layers = [
        "conv1_weight",
        "conv1_bias",
        "conv2_weight",
        "conv2_bias",
        "dense_weight",
        "dense_bias",
    ];
    if layers.len() != expected_layers.len() {
        return Err(Error::Format(format!(
            "layer table: expected {} layers, found {}",
            expected_layers.len(),
            layers.len()
        )));
    }
    for ((lname, _), expect) in layers.iter().zip(expected_layers) {
        if lname != expect {
            return Err(Error::Format(format!(
                "layer table: expected '{expect}', found '{lname}'"
            )));
        }
    }

    let total: usize = layers.iter().map(|(_, n)| n).sum();
    if blob.len() != total * 4 {
        return Err(Error::Format(format!(
            "blob: expected {} bytes for {total} f32 values, found {}",
            total * 4,
            blob.len()
        )));
    }

    let mut offset = 0;
    let mut blobs: Vec<Vec<f32>> = Vec::with_capacity(layers.len());
    for (_, count) in &layers {
        let mut values = Vec::with_capacity(*count);
        for _ in 0..*count {
            let raw: [u8; 4] = blob[offset..offset + 4].try_into().expect("bounds checked");
            values.push(f32::from_le_bytes(raw));
            offset += 4;
        }
        blobs.push(values);
    }
    let blobs: [Vec<f32>; 6] = blobs.try_into().expect("length checked");

    ReferenceCnn::from_parts(name, height, width, num_classes, seed, blobs)
}

fn parse_usize(field: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::Format(format!("{field}: invalid '{value}'")))
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack
        .windows(needle.len())
        .position(|win| win == needle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::DifferentiableClassifier;
    use crate::image::Image;
    use crate::rng::SeedTree;
    use rand::Rng;

    fn random_images(n: usize, h: usize, w: usize, seed: u64) -> Vec<Image> {
        let mut rng = SeedTree::new(seed).rng();
        (0..n)
            .map(|_| {
                let data = (0..h * w * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
                Image::from_vec(h, w, data).unwrap()
            })
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = ReferenceCnn::new(8, 8, 10, 31).unwrap();
        save_checkpoint(&model, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();

        let batch = random_images(10, 8, 8, 5);
        let a = model.predict_probs(&batch).unwrap();
        let b = loaded.predict_probs(&batch).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.values(), y.values());
        }

        // save -> load -> save produces identical bytes
        let path2 = dir.path().join("model2.ckpt");
        save_checkpoint(&loaded, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn truncated_blob_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = ReferenceCnn::new(8, 8, 3, 1).unwrap();
        save_checkpoint(&model, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        match load_checkpoint(&path) {
            Err(Error::Format(msg)) => assert!(msg.contains("blob"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    /// Rewrite a header line of a saved checkpoint, leaving the blob intact.
    fn patch_header(path: &std::path::Path, from: &str, to: &str) {
        let bytes = std::fs::read(path).unwrap();
        let marker = b"\nblob\n";
        let pos = find(&bytes, marker).unwrap();
        let header = std::str::from_utf8(&bytes[..pos]).unwrap().replace(from, to);
        let mut out = header.into_bytes();
        out.extend_from_slice(&bytes[pos..]);
        std::fs::write(path, out).unwrap();
    }

    #[test]
    fn mismatched_num_classes_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = ReferenceCnn::new(8, 8, 3, 1).unwrap();
        save_checkpoint(&model, &path).unwrap();
        patch_header(&path, "num_classes=3", "num_classes=7");
        match load_checkpoint(&path) {
            Err(Error::Format(msg)) => {
                assert!(msg.contains("dense"), "should name the offending field: {msg}")
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_header_field_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let model = ReferenceCnn::new(8, 8, 3, 1).unwrap();
        save_checkpoint(&model, &path).unwrap();
        patch_header(&path, "seed=1", "sneed=1");
        assert!(matches!(load_checkpoint(&path), Err(Error::Format(_))));
    }
}
