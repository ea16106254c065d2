//! Streaming reader for the public Q&A data-dump XML layout: one `<row .../>`
//! element per record, all data in attributes.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PostKind {
    Question,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPost {
    pub id: u64,
    pub kind: PostKind,
    /// Question id, answers only.
    pub parent_id: Option<u64>,
    /// Unix seconds, UTC.
    pub created: i64,
    pub score: i64,
    pub owner: Option<u64>,
    /// Characters of the decoded body, markup included.
    pub body_length: usize,
    /// Characters of the decoded title, questions only.
    pub title_length: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Comment,
    Favorite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawEvent {
    pub kind: EventKind,
    pub post_id: u64,
    /// Unix seconds. Favorites only carry a day and sit at its midnight.
    pub time: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawUser {
    pub id: u64,
    pub reputation: i64,
    pub created: Option<i64>,
}

/// Row tallies of one parse. `*_dropped` rows lacked a required attribute or
/// carried an unparseable one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseCounters {
    pub post_rows: u64,
    pub questions: u64,
    pub answers: u64,
    pub other_post_types: u64,
    pub posts_dropped: u64,
    pub vote_rows: u64,
    pub favorites: u64,
    pub other_votes: u64,
    pub votes_dropped: u64,
    pub comment_rows: u64,
    pub comments: u64,
    pub comments_dropped: u64,
    pub user_rows: u64,
    pub users: u64,
    pub users_dropped: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawDump {
    pub posts: Vec<RawPost>,
    pub comments: Vec<RawEvent>,
    pub favorites: Vec<RawEvent>,
    pub users: Vec<RawUser>,
    pub counters: ParseCounters,
}

/// Paths of the four dump files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpPaths {
    pub posts: PathBuf,
    pub votes: PathBuf,
    pub comments: PathBuf,
    pub users: PathBuf,
}

/// Parses a dump timestamp such as `2008-07-31T21:42:52.667` into Unix
/// seconds, dropping the fraction.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim().trim_end_matches('Z');
    [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S%.f",
    ]
    .iter()
    .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
    .map(|t| t.and_utc().timestamp())
}

/// Unix day number of a timestamp.
pub fn day_of(t: i64) -> i64 {
    t.div_euclid(SECONDS_PER_DAY)
}

/// Decoded attributes of one row.
struct Row(Vec<(Vec<u8>, String)>);

impl Row {
    fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k.as_slice() == key.as_bytes())
            .map(|(_, v)| v.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Option<T> {
        self.get(key)?.trim().parse().ok()
    }

    fn time(&self, key: &str) -> Option<i64> {
        parse_timestamp(self.get(key)?)
    }
}

fn xml_error(path: &Path, offset: u64, e: impl std::fmt::Display) -> Error {
    Error::Xml {
        path: path.to_path_buf(),
        offset,
        message: e.to_string(),
    }
}

fn decode_row(path: &Path, offset: u64, e: &BytesStart<'_>) -> Result<Row> {
    let mut attrs = Vec::new();
    for a in e.attributes() {
        let a = a.map_err(|err| xml_error(path, offset, err))?;
        let value = a
            .unescape_value()
            .map_err(|err| xml_error(path, offset, err))?;
        attrs.push((a.key.as_ref().to_vec(), value.into_owned()));
    }
    Ok(Row(attrs))
}

/// Calls `f` for every `row` element of an XML stream. `path` only labels
/// errors.
fn for_each_row<R: BufRead>(input: R, path: &Path, mut f: impl FnMut(Row)) -> Result<()> {
    let mut reader = Reader::from_reader(input);
    let mut buf = Vec::new();
    loop {
        let offset = reader.buffer_position();
        match reader.read_event_into(&mut buf) {
            Ok(Event::Empty(e)) | Ok(Event::Start(e)) if e.name().as_ref() == b"row" => {
                f(decode_row(path, offset, &e)?);
            }
            Ok(Event::Eof) => return Ok(()),
            Ok(_) => {}
            Err(e) => return Err(xml_error(path, reader.error_position(), e)),
        }
        buf.clear();
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| {
        std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
    })?))
}

fn post_from_row(row: &Row) -> Option<Option<RawPost>> {
    let kind = match row.parse::<u32>("PostTypeId")? {
        1 => PostKind::Question,
        2 => PostKind::Answer,
        _ => return Some(None),
    };
    let id = row.parse("Id")?;
    let created = row.time("CreationDate")?;
    let score = row.parse("Score")?;
    let parent_id = match kind {
        PostKind::Answer => Some(row.parse("ParentId")?),
        PostKind::Question => None,
    };
    let title_length = match kind {
        PostKind::Question => Some(row.get("Title")?.chars().count()),
        PostKind::Answer => None,
    };
    Some(Some(RawPost {
        id,
        kind,
        parent_id,
        created,
        score,
        owner: row.parse("OwnerUserId"),
        body_length: row.get("Body").map_or(0, |b| b.chars().count()),
        title_length,
    }))
}

/// Posts; question rows need `Title`, answer rows need `ParentId`. Other post
/// types are skipped and counted.
pub fn parse_posts<R: BufRead>(
    input: R,
    path: &Path,
    counters: &mut ParseCounters,
) -> Result<Vec<RawPost>> {
    let mut posts = Vec::new();
    for_each_row(input, path, |row| {
        counters.post_rows += 1;
        match post_from_row(&row) {
            None => counters.posts_dropped += 1,
            Some(None) => counters.other_post_types += 1,
            Some(Some(p)) => {
                match p.kind {
                    PostKind::Question => counters.questions += 1,
                    PostKind::Answer => counters.answers += 1,
                }
                posts.push(p);
            }
        }
    })?;
    Ok(posts)
}

/// Favorite votes (type 5); other vote types are counted and skipped.
pub fn parse_votes<R: BufRead>(
    input: R,
    path: &Path,
    counters: &mut ParseCounters,
) -> Result<Vec<RawEvent>> {
    let mut out = Vec::new();
    for_each_row(input, path, |row| {
        counters.vote_rows += 1;
        let Some(kind) = row.parse::<u32>("VoteTypeId") else {
            counters.votes_dropped += 1;
            return;
        };
        if kind != 5 {
            counters.other_votes += 1;
            return;
        }
        match (row.parse("PostId"), row.time("CreationDate")) {
            (Some(post_id), Some(t)) => {
                counters.favorites += 1;
                out.push(RawEvent {
                    kind: EventKind::Favorite,
                    post_id,
                    time: day_of(t) * SECONDS_PER_DAY,
                });
            }
            _ => counters.votes_dropped += 1,
        }
    })?;
    Ok(out)
}

pub fn parse_comments<R: BufRead>(
    input: R,
    path: &Path,
    counters: &mut ParseCounters,
) -> Result<Vec<RawEvent>> {
    let mut out = Vec::new();
    for_each_row(input, path, |row| {
        counters.comment_rows += 1;
        match (row.parse("PostId"), row.time("CreationDate")) {
            (Some(post_id), Some(time)) => {
                counters.comments += 1;
                out.push(RawEvent {
                    kind: EventKind::Comment,
                    post_id,
                    time,
                });
            }
            _ => counters.comments_dropped += 1,
        }
    })?;
    Ok(out)
}

pub fn parse_users<R: BufRead>(
    input: R,
    path: &Path,
    counters: &mut ParseCounters,
) -> Result<Vec<RawUser>> {
    let mut out = Vec::new();
    for_each_row(input, path, |row| {
        counters.user_rows += 1;
        match (row.parse("Id"), row.parse("Reputation")) {
            (Some(id), Some(reputation)) => {
                counters.users += 1;
                out.push(RawUser {
                    id,
                    reputation,
                    created: row.time("CreationDate"),
                });
            }
            _ => counters.users_dropped += 1,
        }
    })?;
    Ok(out)
}

pub fn parse_dump(paths: &DumpPaths) -> Result<RawDump> {
    let mut counters = ParseCounters::default();
    let posts = parse_posts(open(&paths.posts)?, &paths.posts, &mut counters)?;
    let favorites = parse_votes(open(&paths.votes)?, &paths.votes, &mut counters)?;
    let comments = parse_comments(open(&paths.comments)?, &paths.comments, &mut counters)?;
    let users = parse_users(open(&paths.users)?, &paths.users, &mut counters)?;
    Ok(RawDump {
        posts,
        comments,
        favorites,
        users,
        counters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn posts(xml: &str) -> (Vec<RawPost>, ParseCounters) {
        let mut c = ParseCounters::default();
        let p = parse_posts(xml.as_bytes(), Path::new("Posts.xml"), &mut c).unwrap();
        (p, c)
    }

    #[test]
    fn timestamps() {
        assert_eq!(parse_timestamp("1970-01-02T00:00:01.999"), Some(86_401));
        assert_eq!(parse_timestamp("1970-01-01T00:01:00"), Some(60));
        assert_eq!(parse_timestamp("yesterday"), None);
        assert_eq!(day_of(-1), -1);
    }

    #[test]
    fn question_row() {
        let (p, c) = posts(
            r#"<posts><row Id="7" PostTypeId="1" CreationDate="2008-08-01T00:00:00.000"
                 Score="3" OwnerUserId="2" Title="Caf&#xE9; &amp; tea" Body="&lt;p&gt;hi&lt;/p&gt;" /></posts>"#,
        );
        assert_eq!(c.questions, 1);
        assert_eq!(p[0].kind, PostKind::Question);
        assert_eq!(p[0].title_length, Some(10));
        assert_eq!(p[0].body_length, 9);
        assert_eq!(p[0].owner, Some(2));
    }

    #[test]
    fn answer_without_parent_is_dropped() {
        let (p, c) = posts(
            r#"<posts>
                 <row Id="8" PostTypeId="2" CreationDate="2008-08-01T00:00:00" Score="1" />
                 <row Id="9" PostTypeId="2" ParentId="7" CreationDate="2008-08-01T00:00:00" Score="1" />
                 <row Id="10" PostTypeId="4" CreationDate="2008-08-01T00:00:00" Score="0" />
               </posts>"#,
        );
        assert_eq!(p.len(), 1);
        assert_eq!(c.posts_dropped, 1);
        assert_eq!(c.other_post_types, 1);
        assert_eq!(c.post_rows, 3);
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let mut c = ParseCounters::default();
        let err = parse_posts(
            r#"<posts><row Id="1" PostTypeId="1" /></wrong>"#.as_bytes(),
            Path::new("Posts.xml"),
            &mut c,
        )
        .unwrap_err();
        match err {
            Error::Xml { offset, .. } => assert!(offset > 0),
            e => panic!("expected XML error, got {e:?}"),
        }
    }

    #[test]
    fn only_favorites_kept_at_day_resolution() {
        let mut c = ParseCounters::default();
        let v = parse_votes(
            r#"<votes>
                 <row Id="1" PostId="7" VoteTypeId="2" CreationDate="2008-08-01T00:00:00" />
                 <row Id="2" PostId="7" VoteTypeId="5" CreationDate="2008-08-02T13:00:00" />
                 <row Id="3" VoteTypeId="5" CreationDate="2008-08-02T00:00:00" />
               </votes>"#
                .as_bytes(),
            Path::new("Votes.xml"),
            &mut c,
        )
        .unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].time % SECONDS_PER_DAY, 0);
        assert_eq!((c.other_votes, c.votes_dropped, c.favorites), (1, 1, 1));
    }
}
