//! Reader for NIST LWC AEAD known-answer files.
//!
//! Each record is a block of `Field = HEX` lines (`Count`, `Key`, `Nonce`,
//! `PT`, `AD`, `CT`) separated by blank lines. `CT` holds the ciphertext
//! followed by the 16-byte tag.

use super::aead::{aead_decrypt, aead_encrypt, Key, Nonce, KEY_BYTES, NONCE_BYTES, TAG_BYTES};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KatVector {
    pub count: u64,
    /// Line on which the record starts (1-based).
    pub line: usize,
    pub key: [u8; KEY_BYTES],
    pub nonce: [u8; NONCE_BYTES],
    pub plaintext: Vec<u8>,
    pub ad: Vec<u8>,
    /// Ciphertext followed by the tag.
    pub ct: Vec<u8>,
}

#[derive(Debug, thiserror::Error)]
pub enum KatError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

fn malformed(line: usize, msg: impl Into<String>) -> KatError {
    KatError::Malformed {
        line,
        msg: msg.into(),
    }
}

#[derive(Default)]
struct Partial {
    line: usize,
    count: Option<u64>,
    key: Option<Vec<u8>>,
    nonce: Option<Vec<u8>>,
    pt: Option<Vec<u8>>,
    ad: Option<Vec<u8>>,
    ct: Option<Vec<u8>>,
}

impl Partial {
    fn is_empty(&self) -> bool {
        self.count.is_none()
            && self.key.is_none()
            && self.nonce.is_none()
            && self.pt.is_none()
            && self.ad.is_none()
            && self.ct.is_none()
    }

    fn finish(self) -> Result<KatVector, KatError> {
        let line = self.line;
        let need = |v: Option<Vec<u8>>, name: &str| {
            v.ok_or_else(|| malformed(line, format!("record is missing `{name}`")))
        };
        let count = self
            .count
            .ok_or_else(|| malformed(line, "record is missing `Count`"))?;
        let key = need(self.key, "Key")?;
        let nonce = need(self.nonce, "Nonce")?;
        let plaintext = need(self.pt, "PT")?;
        let ad = need(self.ad, "AD")?;
        let ct = need(self.ct, "CT")?;
        let key: [u8; KEY_BYTES] = key.try_into().map_err(|v: Vec<u8>| {
            malformed(line, format!("Key has {} bytes, expected 32", v.len()))
        })?;
        let nonce: [u8; NONCE_BYTES] = nonce.try_into().map_err(|v: Vec<u8>| {
            malformed(line, format!("Nonce has {} bytes, expected 16", v.len()))
        })?;
        if ct.len() != plaintext.len() + TAG_BYTES {
            return Err(malformed(
                line,
                format!(
                    "CT has {} bytes, expected PT length + 16 = {}",
                    ct.len(),
                    plaintext.len() + TAG_BYTES
                ),
            ));
        }
        Ok(KatVector {
            count,
            line,
            key,
            nonce,
            plaintext,
            ad,
            ct,
        })
    }
}

pub fn parse_kat(text: &str) -> Result<Vec<KatVector>, KatError> {
    let mut out = Vec::new();
    let mut cur = Partial::default();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur).finish()?);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (field, value) = line
            .split_once('=')
            .ok_or_else(|| malformed(lineno, format!("expected `Field = value`, got `{line}`")))?;
        let field = field.trim();
        let value = value.trim();
        if cur.is_empty() {
            cur.line = lineno;
        }
        let bytes = || {
            hex::decode(value).map_err(|e| malformed(lineno, format!("bad hex in {field}: {e}")))
        };
        let slot = match field {
            "Count" => {
                let n = value
                    .parse()
                    .map_err(|_| malformed(lineno, format!("bad Count `{value}`")))?;
                if cur.count.replace(n).is_some() {
                    return Err(malformed(lineno, "duplicate `Count`"));
                }
                continue;
            }
            "Key" => &mut cur.key,
            "Nonce" => &mut cur.nonce,
            "PT" => &mut cur.pt,
            "AD" => &mut cur.ad,
            "CT" => &mut cur.ct,
            other => return Err(malformed(lineno, format!("unknown field `{other}`"))),
        };
        if slot.replace(bytes()?).is_some() {
            return Err(malformed(lineno, format!("duplicate `{field}`")));
        }
    }
    if !cur.is_empty() {
        out.push(cur.finish()?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KatOutcome {
    pub count: u64,
    pub encrypt_ok: bool,
    pub decrypt_ok: bool,
}

impl KatOutcome {
    pub fn passed(&self) -> bool {
        self.encrypt_ok && self.decrypt_ok
    }
}

/// Runs one vector through encryption and decryption.
pub fn check_vector(v: &KatVector) -> KatOutcome {
    let key = Key::from_bytes(&v.key);
    let nonce = Nonce::from_bytes(&v.nonce);
    let r = aead_encrypt(&key, &nonce, &v.ad, &v.plaintext);
    let mut produced = r.ciphertext;
    produced.extend_from_slice(&r.tag);
    let encrypt_ok = produced == v.ct;

    let split = v.ct.len() - TAG_BYTES;
    let mut tag = [0u8; TAG_BYTES];
    tag.copy_from_slice(&v.ct[split..]);
    let decrypt_ok = aead_decrypt(&key, &nonce, &v.ad, &v.ct[..split], &tag).as_deref()
        == Some(&v.plaintext[..]);
    KatOutcome {
        count: v.count,
        encrypt_ok,
        decrypt_ok,
    }
}
