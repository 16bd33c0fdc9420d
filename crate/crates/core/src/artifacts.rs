//! On-disk index artifacts.
//!
//! An index directory holds a manifest, the catalog, the chunk index and the
//! knowledge graph. Vectors are raw little-endian `f32` arrays, one row per
//! item, each with a JSON sidecar giving dimension and count. Every file is
//! listed in the manifest with its SHA-256, and loading verifies all of them.
//!
//! ```text
//! manifest.json
//! catalog.json
//! chunks.json   chunks.f32   chunks.meta.json
//! graph.json    graph.f32    graph.meta.json
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalog::{CatalogError, SchemaCatalog};
use crate::contextual::{Chunk, ChunkId, ChunkIndex, ContextualError};
use crate::pipeline::{PipelineConfig, RetrievalIndexes};
use crate::similarity::{build_corpus_stats, EmbeddingVector, SimilarityError};
use crate::sql::RelevantSet;
use crate::structural::KnowledgeGraph;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("index format version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("{path}: content hash mismatch: manifest has {expected}, file has {found}")]
    HashMismatch { path: PathBuf, expected: String, found: String },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Contextual(#[from] ContextualError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub name: String,
    pub files: Vec<ArtifactFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    /// Leading 16 hex digits of the catalog file's SHA-256.
    pub schema_version: String,
    pub config: PipelineConfig,
    pub artifacts: Vec<Artifact>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorSidecar {
    pub dimension: usize,
    pub count: usize,
    pub dtype: VectorDtype,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorDtype {
    F32le,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ChunkRecord {
    question: String,
    sql: String,
    tables: Vec<String>,
    columns: Vec<(String, String)>,
    contextualized: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TripletRecord {
    column: String,
    table: String,
    surface: String,
}

/// A loaded index directory.
#[derive(Debug)]
pub struct LoadedIndex {
    pub manifest: Manifest,
    pub indexes: RetrievalIndexes,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn schema_version(catalog_json: &[u8]) -> String {
    sha256_hex(catalog_json)[..16].to_string()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Json {
        path: path.to_path_buf(),
        source,
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
    bytes.push(b'\n');
    bytes
}

fn vector_bytes(vectors: &[EmbeddingVector]) -> Vec<u8> {
    let mut out = Vec::with_capacity(vectors.iter().map(|v| v.dimension() * 4).sum());
    for v in vectors {
        for x in v.values() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

fn vectors_from_bytes(bytes: &[u8], meta: &VectorSidecar) -> Result<Vec<EmbeddingVector>, ArtifactError> {
    if bytes.len() != meta.dimension * meta.count * 4 {
        return Err(ArtifactError::Corrupt(format!(
            "vector file has {} bytes, sidecar promises {} x {} f32",
            bytes.len(),
            meta.count,
            meta.dimension
        )));
    }
    if meta.dimension == 0 {
        return Ok(vec![EmbeddingVector::new(Vec::new()); meta.count]);
    }
    Ok(bytes
        .chunks_exact(meta.dimension * 4)
        .map(|row| {
            EmbeddingVector::new(
                row.chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                    .collect(),
            )
        })
        .collect())
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<ArtifactFile>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), ArtifactError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.files.push(ArtifactFile {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn finish(&mut self, name: &str) -> Artifact {
        Artifact {
            name: name.to_string(),
            files: std::mem::take(&mut self.files),
        }
    }
}

/// Writes `indexes` to `dir`, creating it if needed, and returns the manifest.
pub fn write_index(dir: &Path, indexes: &RetrievalIndexes, config: &PipelineConfig) -> Result<Manifest, ArtifactError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let catalog = &indexes.catalog;
    let mut w = Writer { dir, files: Vec::new() };
    let mut artifacts = Vec::new();

    let catalog_json = to_json(&catalog.to_document());
    w.put("catalog.json", &catalog_json)?;
    artifacts.push(w.finish("catalog"));

    let records: Vec<ChunkRecord> = indexes
        .chunks
        .chunks()
        .iter()
        .map(|c| ChunkRecord {
            question: c.question.clone(),
            sql: c.sql.clone(),
            tables: c.relevant.tables.iter().map(|&t| catalog.table(t).name.clone()).collect(),
            columns: c
                .relevant
                .columns
                .iter()
                .map(|&(t, col)| (catalog.table(t).name.clone(), catalog.column(col).name.clone()))
                .collect(),
            contextualized: c.contextualized.clone(),
        })
        .collect();
    let vectors: Vec<EmbeddingVector> = indexes.chunks.chunks().iter().map(|c| c.vector.clone()).collect();
    w.put("chunks.json", &to_json(&records))?;
    w.put("chunks.f32", &vector_bytes(&vectors))?;
    w.put(
        "chunks.meta.json",
        &to_json(&VectorSidecar {
            dimension: indexes.chunks.embedder().dimension(),
            count: vectors.len(),
            dtype: VectorDtype::F32le,
        }),
    )?;
    artifacts.push(w.finish("chunk_index"));

    let triplets: Vec<TripletRecord> = indexes
        .graph
        .triplets()
        .iter()
        .map(|t| TripletRecord {
            column: catalog.column(t.field).name.clone(),
            table: catalog.table(t.table).name.clone(),
            surface: t.surface.clone(),
        })
        .collect();
    w.put("graph.json", &to_json(&triplets))?;
    w.put("graph.f32", &vector_bytes(indexes.graph.vectors()))?;
    w.put(
        "graph.meta.json",
        &to_json(&VectorSidecar {
            dimension: indexes.graph.embedder().dimension(),
            count: triplets.len(),
            dtype: VectorDtype::F32le,
        }),
    )?;
    artifacts.push(w.finish("knowledge_graph"));

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        schema_version: schema_version(&catalog_json),
        config: config.clone(),
        artifacts,
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, to_json(&manifest)).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Reads and version-checks the manifest only.
pub fn read_manifest(dir: &Path) -> Result<Manifest, ArtifactError> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let raw: serde_json::Value = serde_json::from_slice(&bytes).map_err(json_err(&path))?;
    let found = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| ArtifactError::Corrupt(format!("{}: missing format_version", path.display())))?;
    if found != FORMAT_VERSION as u64 {
        return Err(ArtifactError::VersionMismatch {
            expected: FORMAT_VERSION,
            found: found.min(u32::MAX as u64) as u32,
        });
    }
    serde_json::from_value(raw).map_err(json_err(&path))
}

struct Reader<'a> {
    dir: &'a Path,
    manifest: &'a Manifest,
}

impl Reader<'_> {
    fn get(&self, name: &str) -> Result<Vec<u8>, ArtifactError> {
        let entry = self
            .manifest
            .artifacts
            .iter()
            .flat_map(|a| &a.files)
            .find(|f| f.path == name)
            .ok_or_else(|| ArtifactError::Corrupt(format!("manifest does not list {name}")))?;
        let path = self.dir.join(name);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let found = sha256_hex(&bytes);
        if found != entry.sha256 {
            return Err(ArtifactError::HashMismatch {
                path,
                expected: entry.sha256.clone(),
                found,
            });
        }
        Ok(bytes)
    }

    fn json<T: for<'de> Deserialize<'de>>(&self, name: &str) -> Result<T, ArtifactError> {
        let bytes = self.get(name)?;
        serde_json::from_slice(&bytes).map_err(json_err(&self.dir.join(name)))
    }

    fn vectors(&self, stem: &str, dimension: usize, count: usize) -> Result<Vec<EmbeddingVector>, ArtifactError> {
        let meta: VectorSidecar = self.json(&format!("{stem}.meta.json"))?;
        if meta.dimension != dimension || meta.count != count {
            return Err(ArtifactError::Corrupt(format!(
                "{stem}: sidecar says {} x {}, expected {} x {}",
                meta.count, meta.dimension, count, dimension
            )));
        }
        vectors_from_bytes(&self.get(&format!("{stem}.f32"))?, &meta)
    }
}

/// Loads an index directory, verifying version and every content hash.
pub fn load_index(dir: &Path) -> Result<LoadedIndex, ArtifactError> {
    let manifest = read_manifest(dir)?;
    let r = Reader { dir, manifest: &manifest };
    let similarity = &manifest.config.similarity;

    let catalog_bytes = r.get("catalog.json")?;
    if schema_version(&catalog_bytes) != manifest.schema_version {
        return Err(ArtifactError::Corrupt("schema_version does not match catalog.json".into()));
    }
    let catalog = SchemaCatalog::from_json(std::str::from_utf8(&catalog_bytes).map_err(|e| {
        ArtifactError::Corrupt(format!("catalog.json is not UTF-8: {e}"))
    })?)?;

    let records: Vec<ChunkRecord> = r.json("chunks.json")?;
    let texts: Vec<String> = records.iter().map(|c| c.contextualized.clone()).collect();
    let chunk_stats = Arc::new(build_corpus_stats(&texts));
    let chunk_embedder = similarity.embedder(chunk_stats.clone())?;
    let vectors = r.vectors("chunks", chunk_embedder.dimension(), records.len())?;
    let mut chunks = Vec::with_capacity(records.len());
    for (i, (rec, vector)) in records.into_iter().zip(vectors).enumerate() {
        let table = |name: &str| {
            catalog
                .lookup_table(name)
                .ok_or_else(|| ArtifactError::Corrupt(format!("chunk {i} names unknown table '{name}'")))
        };
        let tables = rec.tables.iter().map(|n| table(n)).collect::<Result<BTreeSet<_>, _>>()?;
        let mut columns = BTreeSet::new();
        for (t, c) in &rec.columns {
            let tid = table(t)?;
            let cid = catalog
                .lookup_column(tid, c)
                .ok_or_else(|| ArtifactError::Corrupt(format!("chunk {i} names unknown column '{t}.{c}'")))?;
            columns.insert((tid, cid));
        }
        chunks.push(Chunk {
            id: ChunkId(i as u32),
            question: rec.question,
            sql: rec.sql,
            relevant: RelevantSet { tables, columns },
            contextualized: rec.contextualized,
            vector,
        });
    }
    let chunk_index = ChunkIndex::from_parts(chunks, similarity.clone(), chunk_stats, chunk_embedder)?;

    let triplets: Vec<TripletRecord> = r.json("graph.json")?;
    let surfaces: Vec<String> = triplets.iter().map(|t| t.surface.clone()).collect();
    let graph_stats = Arc::new(build_corpus_stats(&surfaces));
    let graph_embedder = similarity.embedder(graph_stats.clone())?;
    let vectors = r.vectors("graph", graph_embedder.dimension(), triplets.len())?;
    let graph = KnowledgeGraph::from_parts(&catalog, vectors, similarity.clone(), graph_stats, graph_embedder)?;
    if graph.triplets().iter().map(|t| &t.surface).ne(surfaces.iter()) {
        return Err(ArtifactError::Corrupt("graph.json does not match the catalog's triplets".into()));
    }

    Ok(LoadedIndex {
        indexes: RetrievalIndexes {
            catalog,
            chunks: chunk_index,
            graph,
        },
        manifest,
    })
}
