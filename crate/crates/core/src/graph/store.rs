//! Graph persistence: a versioned binary cache plus JSONL exports.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{EvidenceSentence, FreeTextGraph, GraphEdge, GraphNode, Provenance};

const MAGIC: &[u8; 4] = b"FTKG";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path} is not a graph cache (bad magic header)")]
    BadMagic { path: String },
    #[error("{path} has unsupported graph cache version {found} (expected {VERSION})")]
    UnsupportedVersion { path: String, found: u32 },
    #[error("{path} is truncated or corrupt: {message}")]
    Corrupt { path: String, message: String },
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
}

/// Serializes the graph to a compact little-endian binary file.
/// Serialization is canonical: saving a loaded graph is byte-identical.
pub fn save_graph(graph: &FreeTextGraph, path: &Path) -> Result<(), GraphError> {
    let io_err = |source| GraphError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let r = write_graph(graph, &mut w);
    r.and_then(|_| w.flush()).map_err(io_err)
}

fn write_graph<W: Write>(graph: &FreeTextGraph, w: &mut W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(graph.nodes().len() as u64).to_le_bytes())?;
    for node in graph.nodes() {
        write_str(w, &node.entity_id)?;
        write_str(w, &node.gloss)?;
    }
    w.write_all(&(graph.edges().len() as u64).to_le_bytes())?;
    for edge in graph.edges() {
        write_str(w, &edge.entity_a)?;
        write_str(w, &edge.entity_b)?;
        w.write_all(&(edge.sentences.len() as u64).to_le_bytes())?;
        for s in &edge.sentences {
            write_str(w, &s.text)?;
            write_str(w, &s.source_doc)?;
            let tag: u8 = match s.provenance {
                Provenance::InAPage => 0,
                Provenance::InBPage => 1,
                Provenance::External => 2,
            };
            w.write_all(&[tag])?;
        }
    }
    Ok(())
}

/// Loads a graph cache written by [`save_graph`].
pub fn load_graph(path: &Path) -> Result<FreeTextGraph, GraphError> {
    let file = File::open(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut r = Reader {
        inner: BufReader::new(file),
        path: path.display().to_string(),
    };

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(GraphError::BadMagic { path: r.path });
    }
    let version = r.read_u32()?;
    if version != VERSION {
        return Err(GraphError::UnsupportedVersion {
            path: r.path,
            found: version,
        });
    }

    let node_count = r.read_u64()? as usize;
    let mut nodes = Vec::with_capacity(node_count.min(1 << 20));
    for _ in 0..node_count {
        let entity_id = r.read_str()?;
        let gloss = r.read_str()?;
        nodes.push(GraphNode { entity_id, gloss });
    }
    let edge_count = r.read_u64()? as usize;
    let mut edges = Vec::with_capacity(edge_count.min(1 << 20));
    for _ in 0..edge_count {
        let entity_a = r.read_str()?;
        let entity_b = r.read_str()?;
        let sent_count = r.read_u64()? as usize;
        let mut sentences = Vec::with_capacity(sent_count.min(1 << 20));
        for _ in 0..sent_count {
            let text = r.read_str()?;
            let source_doc = r.read_str()?;
            let provenance = match r.read_u8()? {
                0 => Provenance::InAPage,
                1 => Provenance::InBPage,
                2 => Provenance::External,
                other => {
                    return Err(GraphError::Corrupt {
                        path: r.path,
                        message: format!("invalid provenance tag {other}"),
                    })
                }
            };
            sentences.push(EvidenceSentence {
                text,
                source_doc,
                provenance,
            });
        }
        edges.push(GraphEdge {
            entity_a,
            entity_b,
            sentences,
        });
    }
    Ok(FreeTextGraph::new(nodes, edges))
}

struct Reader {
    inner: BufReader<File>,
    path: String,
}

impl Reader {
    fn read_exact(&mut self, buf: &mut [u8]) -> Result<(), GraphError> {
        self.inner.read_exact(buf).map_err(|e| GraphError::Corrupt {
            path: self.path.clone(),
            message: e.to_string(),
        })
    }

    fn read_u8(&mut self) -> Result<u8, GraphError> {
        let mut b = [0u8; 1];
        self.read_exact(&mut b)?;
        Ok(b[0])
    }

    fn read_u32(&mut self) -> Result<u32, GraphError> {
        let mut b = [0u8; 4];
        self.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn read_u64(&mut self) -> Result<u64, GraphError> {
        let mut b = [0u8; 8];
        self.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn read_str(&mut self) -> Result<String, GraphError> {
        let len = self.read_u64()? as usize;
        if len > (1 << 30) {
            return Err(GraphError::Corrupt {
                path: self.path.clone(),
                message: format!("string length {len} out of range"),
            });
        }
        let mut buf = vec![0u8; len];
        self.read_exact(&mut buf)?;
        String::from_utf8(buf).map_err(|e| GraphError::Corrupt {
            path: self.path.clone(),
            message: e.to_string(),
        })
    }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u64).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

/// Writes `nodes.jsonl`: one `{"entity_id", "gloss"}` object per line.
pub fn write_nodes_jsonl(graph: &FreeTextGraph, path: &Path) -> Result<(), GraphError> {
    let io_err = |source| GraphError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut run = || -> std::io::Result<()> {
        for node in graph.nodes() {
            serde_json::to_writer(&mut w, node)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    };
    run().map_err(io_err)
}

/// Writes `edges.jsonl`: `{"a", "b", "sentences": [{"text", "doc", "prov"}]}`.
pub fn write_edges_jsonl(graph: &FreeTextGraph, path: &Path) -> Result<(), GraphError> {
    let io_err = |source| GraphError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut run = || -> std::io::Result<()> {
        for edge in graph.edges() {
            serde_json::to_writer(&mut w, edge)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    };
    run().map_err(io_err)
}
