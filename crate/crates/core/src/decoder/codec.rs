//! Binary trie file, little endian:
//!
//! ```text
//! u32 version
//! str tokenizer_id
//! records in preorder, children in token order:
//!   str token          (empty for the root)
//!   u32 child_count
//!   u8  terminal       (0 or 1)
//!   str graph_id, str node_id   (only when terminal = 1)
//! ```
//!
//! `str` is a u32 byte length followed by UTF-8 bytes.

use std::collections::BTreeMap;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{DecodeError, PrefixTree, TrieNode};
use crate::fsutil::write_atomic;
use crate::vocab::NodeRef;

pub const TRIE_FORMAT_VERSION: u32 = 1;

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.write_u32::<LittleEndian>(s.len() as u32).expect("vec write");
    out.write_all(s.as_bytes()).expect("vec write");
}

pub(crate) fn encode(tree: &PrefixTree) -> Vec<u8> {
    let mut out = Vec::new();
    out.write_u32::<LittleEndian>(TRIE_FORMAT_VERSION).expect("vec write");
    put_str(&mut out, tree.tokenizer_id());
    let mut stack = vec![PrefixTree::ROOT];
    while let Some(at) = stack.pop() {
        let n = tree.node(at);
        put_str(&mut out, &n.token);
        out.write_u32::<LittleEndian>(n.children.len() as u32).expect("vec write");
        match &n.terminal {
            Some(t) => {
                out.push(1);
                put_str(&mut out, &t.graph_id);
                put_str(&mut out, &t.node_id);
            }
            None => out.push(0),
        }
        stack.extend(n.children.values().rev());
    }
    out
}

fn corrupt(e: impl std::fmt::Display) -> DecodeError {
    DecodeError::TrieFormat(e.to_string())
}

fn get_str(cur: &mut Cursor<&[u8]>) -> Result<String, DecodeError> {
    let len = cur.read_u32::<LittleEndian>().map_err(corrupt)? as usize;
    let left = cur.get_ref().len() - cur.position() as usize;
    if len > left {
        return Err(corrupt(format!("string of {len} bytes with {left} left")));
    }
    let mut buf = vec![0; len];
    cur.read_exact(&mut buf).map_err(corrupt)?;
    String::from_utf8(buf).map_err(corrupt)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<PrefixTree, DecodeError> {
    let mut cur = Cursor::new(bytes);
    let version = cur.read_u32::<LittleEndian>().map_err(corrupt)?;
    if version != TRIE_FORMAT_VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let tokenizer_id = get_str(&mut cur)?;
    let mut nodes: Vec<TrieNode> = Vec::new();
    // (node index, children still to read)
    let mut open: Vec<(usize, u32)> = Vec::new();
    loop {
        let token = get_str(&mut cur)?;
        let children = cur.read_u32::<LittleEndian>().map_err(corrupt)?;
        let terminal = match cur.read_u8().map_err(corrupt)? {
            0 => None,
            1 => {
                let graph_id = get_str(&mut cur)?;
                Some(NodeRef::new(graph_id, get_str(&mut cur)?))
            }
            f => return Err(corrupt(format!("bad terminal flag {f}"))),
        };
        let idx = nodes.len();
        if let Some((parent, _)) = open.last() {
            if nodes[*parent].children.insert(token.clone(), idx).is_some() {
                return Err(corrupt(format!("repeated sibling token `{token}`")));
            }
        } else if idx != 0 {
            return Err(corrupt("records after the root subtree"));
        }
        nodes.push(TrieNode {
            token,
            children: BTreeMap::new(),
            terminal,
        });
        if children > 0 {
            open.push((idx, children));
        } else {
            while let Some(top) = open.last_mut() {
                top.1 -= 1;
                if top.1 > 0 {
                    break;
                }
                open.pop();
            }
        }
        if open.is_empty() {
            break;
        }
    }
    if cur.position() as usize != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }
    if !nodes[0].token.is_empty() {
        return Err(corrupt("root carries a token"));
    }
    PrefixTree::from_arena(tokenizer_id, nodes).map_err(corrupt)
}

pub fn write_tree(tree: &PrefixTree, path: &Path) -> Result<(), DecodeError> {
    write_atomic(path, &encode(tree))?;
    Ok(())
}

pub fn read_tree(path: &Path) -> Result<PrefixTree, DecodeError> {
    decode(&std::fs::read(path)?)
}
