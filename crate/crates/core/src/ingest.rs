//! Event-stream and user-statistics parsing, plus the perimeter filter.
//!
//! Events are newline-delimited JSON records:
//!
//! ```text
//! {"id":"7","uid":"a","ts":100,"kind":"quote","ref":"3"}
//! ```
//!
//! `ref` is required for retweets and quotes and forbidden for originals.

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvio::{self, CsvError};
use crate::ids::{TweetId, UserId};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error("median follower threshold needs at least one user")]
    EmptyUserSet,
    #[error("invalid perimeter config: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TweetKind {
    Original,
    Retweet,
    Quote,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TweetEvent {
    pub tweet_id: TweetId,
    pub user_id: UserId,
    pub timestamp: i64,
    pub kind: TweetKind,
    /// Present exactly when `kind` is retweet or quote.
    pub ref_tweet_id: Option<TweetId>,
}

impl TweetEvent {
    pub fn original(id: &str, user: &str, ts: i64) -> Self {
        Self {
            tweet_id: id.into(),
            user_id: user.into(),
            timestamp: ts,
            kind: TweetKind::Original,
            ref_tweet_id: None,
        }
    }

    pub fn quote(id: &str, user: &str, ts: i64, target: &str) -> Self {
        Self {
            tweet_id: id.into(),
            user_id: user.into(),
            timestamp: ts,
            kind: TweetKind::Quote,
            ref_tweet_id: Some(target.into()),
        }
    }

    pub fn retweet(id: &str, user: &str, ts: i64, target: &str) -> Self {
        Self {
            tweet_id: id.into(),
            user_id: user.into(),
            timestamp: ts,
            kind: TweetKind::Retweet,
            ref_tweet_id: Some(target.into()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawEvent {
    id: String,
    uid: String,
    ts: i64,
    kind: TweetKind,
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    reference: Option<String>,
}

impl RawEvent {
    fn validate(self) -> Result<TweetEvent, String> {
        match (self.kind, &self.reference) {
            (TweetKind::Original, Some(_)) => {
                return Err("unexpected ref_tweet_id on original tweet".into())
            }
            (TweetKind::Retweet | TweetKind::Quote, None) => {
                return Err("missing ref_tweet_id".into())
            }
            _ => {}
        }
        if self.id.is_empty() {
            return Err("empty tweet id".into());
        }
        if self.uid.is_empty() {
            return Err("empty user id".into());
        }
        Ok(TweetEvent {
            tweet_id: TweetId::new(self.id),
            user_id: UserId::new(self.uid),
            timestamp: self.ts,
            kind: self.kind,
            ref_tweet_id: self.reference.map(TweetId::new),
        })
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Skip malformed records instead of failing the whole run.
    pub lenient: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ParsedEvents {
    pub events: Vec<TweetEvent>,
    pub blank_lines: u64,
    /// `(line, reason)` for records skipped in lenient mode.
    pub skipped: Vec<(u64, String)>,
}

pub fn parse_events<R: BufRead>(reader: R, opts: ParseOptions) -> Result<ParsedEvents, IngestError> {
    let mut out = ParsedEvents::default();
    let mut seen: HashSet<TweetId> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            out.blank_lines += 1;
            continue;
        }
        let parsed = serde_json::from_str::<RawEvent>(trimmed)
            .map_err(|e| e.to_string())
            .and_then(RawEvent::validate)
            .and_then(|ev| {
                if seen.insert(ev.tweet_id.clone()) {
                    Ok(ev)
                } else {
                    Err(format!("duplicate tweet_id `{}`", ev.tweet_id))
                }
            });
        match parsed {
            Ok(ev) => out.events.push(ev),
            Err(reason) if opts.lenient => out.skipped.push((line_no, reason)),
            Err(reason) => {
                return Err(IngestError::Malformed {
                    line: line_no,
                    reason,
                })
            }
        }
    }
    Ok(out)
}

pub fn write_events<W: Write>(mut out: W, events: &[TweetEvent]) -> std::io::Result<()> {
    for ev in events {
        let raw = RawEvent {
            id: ev.tweet_id.as_str().to_owned(),
            uid: ev.user_id.as_str().to_owned(),
            ts: ev.timestamp,
            kind: ev.kind,
            reference: ev.ref_tweet_id.as_ref().map(|r| r.as_str().to_owned()),
        };
        serde_json::to_writer(&mut out, &raw)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserStats {
    pub user_id: UserId,
    pub follower_count: u64,
    pub tweet_count_window: u64,
    /// Share of the user's tweets in the target language, in `[0, 1]`.
    pub lang_share: f64,
}

pub const USER_STATS_HEADER: [&str; 4] = ["user_id", "follower_count", "tweet_count", "lang_share"];

pub fn read_user_stats<R: Read>(reader: R, path: &str) -> Result<Vec<UserStats>, IngestError> {
    let mut users = Vec::new();
    csvio::read_records(reader, path, &USER_STATS_HEADER, |_, rec| {
        let lang_share = csvio::parse_f64(&rec[3], "lang_share")?;
        if !(0.0..=1.0).contains(&lang_share) {
            return Err(format!("lang_share {lang_share} outside [0,1]"));
        }
        users.push(UserStats {
            user_id: UserId::new(&rec[0]),
            follower_count: csvio::parse_u64(&rec[1], "follower_count")?,
            tweet_count_window: csvio::parse_u64(&rec[2], "tweet_count")?,
            lang_share,
        });
        Ok(())
    })?;
    Ok(users)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FollowerThreshold {
    /// Lower median of the follower counts of the whole input.
    MedianOfInput,
    Fixed(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerimeterConfig {
    pub min_tweets: u64,
    pub follower_threshold: FollowerThreshold,
    pub min_lang_share: f64,
}

impl Default for PerimeterConfig {
    fn default() -> Self {
        Self {
            min_tweets: 5,
            follower_threshold: FollowerThreshold::MedianOfInput,
            min_lang_share: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Perimeter {
    pub users: BTreeSet<UserId>,
    pub follower_threshold: u64,
}

/// Keeps users with enough activity, strictly more followers than the
/// threshold, and a sufficient share of tweets in the target language.
pub fn apply_perimeter(users: &[UserStats], cfg: &PerimeterConfig) -> Result<Perimeter, IngestError> {
    if !(0.0..=1.0).contains(&cfg.min_lang_share) {
        return Err(IngestError::InvalidConfig(format!(
            "min_lang_share {} outside [0,1]",
            cfg.min_lang_share
        )));
    }
    let threshold = match cfg.follower_threshold {
        FollowerThreshold::Fixed(v) => v,
        FollowerThreshold::MedianOfInput => lower_median(users.iter().map(|u| u.follower_count))
            .ok_or(IngestError::EmptyUserSet)?,
    };
    let users = users
        .iter()
        .filter(|u| {
            u.tweet_count_window >= cfg.min_tweets
                && u.follower_count > threshold
                && u.lang_share >= cfg.min_lang_share
        })
        .map(|u| u.user_id.clone())
        .collect();
    Ok(Perimeter {
        users,
        follower_threshold: threshold,
    })
}

fn lower_median(values: impl Iterator<Item = u64>) -> Option<u64> {
    let mut v: Vec<u64> = values.collect();
    if v.is_empty() {
        return None;
    }
    let mid = (v.len() - 1) / 2;
    let (_, m, _) = v.select_nth_unstable(mid);
    Some(*m)
}
