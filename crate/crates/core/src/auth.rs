//! Signed bearer tokens. A token names one subject (a rater id or the
//! operator) and is bound to one campaign through an HMAC-SHA256 tag keyed
//! with the campaign's secret.

use hmac::{Hmac, KeyInit, Mac};
use sha2::Sha256;
use thiserror::Error;

use crate::error::{Coded, ErrorClass};

type HmacSha256 = Hmac<Sha256>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("missing bearer token")]
    Missing,
    #[error("malformed bearer token")]
    Malformed,
    #[error("token signature does not match this campaign")]
    BadSignature,
}

impl Coded for AuthError {
    fn code(&self) -> &'static str {
        match self {
            AuthError::Missing => "missing_token",
            AuthError::Malformed => "malformed_token",
            AuthError::BadSignature => "bad_token",
        }
    }

    fn class(&self) -> ErrorClass {
        ErrorClass::Malformed
    }
}

fn mac(secret: &[u8], campaign: &str, subject: &str) -> HmacSha256 {
    let mut mac = HmacSha256::new_from_slice(secret).expect("HMAC accepts keys of any length");
    mac.update(b"curalens-token/v1\0");
    mac.update(campaign.as_bytes());
    mac.update(b"\0");
    mac.update(subject.as_bytes());
    mac
}

/// Returns `<subject>.<hex tag>`.
pub fn mint_token(secret: &[u8], campaign: &str, subject: &str) -> String {
    let tag = mac(secret, campaign, subject).finalize().into_bytes();
    format!("{subject}.{}", hex::encode(tag))
}

/// Checks the tag in constant time and returns the token's subject.
pub fn verify_token(secret: &[u8], campaign: &str, token: &str) -> Result<String, AuthError> {
    let (subject, tag) = token.rsplit_once('.').ok_or(AuthError::Malformed)?;
    if subject.is_empty() {
        return Err(AuthError::Malformed);
    }
    let tag = hex::decode(tag).map_err(|_| AuthError::Malformed)?;
    mac(secret, campaign, subject)
        .verify_slice(&tag)
        .map_err(|_| AuthError::BadSignature)?;
    Ok(subject.to_owned())
}
