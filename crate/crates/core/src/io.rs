//! On-disk dataset layout and external import.
//!
//! A dataset directory holds:
//!
//! * `edges.csv`: header `src,dst`, one undirected edge per line with
//!   `src < dst`, 0-based ids, LF endings.
//! * `features.gft`: binary matrix, see [`write_gft`].
//! * `labels.csv` (optional): header `node,label`, one line per node.
//! * `meta.txt`: `key=value` lines with the name and provenance.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dataset::{GraphDataset, Provenance};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::Graph;
use crate::kv::KvFile;

pub const GFT_MAGIC: &[u8; 4] = b"GFT1";
pub const GFT_VERSION: u32 = 1;
pub const GFT_DTYPE_F32: u32 = 1;
/// magic + version + dtype + rows + cols
pub const GFT_HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

/// Encodes a matrix as `GFT1 | u32 version | u32 dtype | u64 rows | u64 cols`
/// followed by row-major `f32` values, all little-endian.
pub fn encode_gft(m: &FeatureMatrix) -> Vec<u8> {
    let mut buf = Vec::with_capacity(GFT_HEADER_LEN + 4 * m.data().len());
    buf.extend_from_slice(GFT_MAGIC);
    buf.extend_from_slice(&GFT_VERSION.to_le_bytes());
    buf.extend_from_slice(&GFT_DTYPE_F32.to_le_bytes());
    buf.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for &x in m.data() {
        buf.extend_from_slice(&(x as f32).to_le_bytes());
    }
    buf
}

pub fn decode_gft(bytes: &[u8], origin: &Path) -> Result<FeatureMatrix> {
    if bytes.len() < GFT_HEADER_LEN {
        return Err(Error::format(
            origin,
            format!("{} bytes is shorter than the {GFT_HEADER_LEN}-byte header", bytes.len()),
        ));
    }
    if &bytes[..4] != GFT_MAGIC {
        return Err(Error::format(origin, "offset 0: bad magic, expected GFT1"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != GFT_VERSION {
        return Err(Error::format(origin, format!("offset 4: unsupported version {version}")));
    }
    let dtype = u32_at(8);
    if dtype != GFT_DTYPE_F32 {
        return Err(Error::format(origin, format!("offset 8: unsupported dtype code {dtype}")));
    }
    let rows = u64_at(12) as usize;
    let cols = u64_at(20) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(GFT_HEADER_LEN))
        .ok_or_else(|| Error::format(origin, "offset 12: header dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            origin,
            format!("payload is {} bytes, header implies {expected}", bytes.len()),
        ));
    }
    let data: Vec<f64> = bytes[GFT_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    if let Some(i) = data.iter().position(|x| !x.is_finite()) {
        return Err(Error::format(
            origin,
            format!("offset {}: non-finite value", GFT_HEADER_LEN + 4 * i),
        ));
    }
    FeatureMatrix::new(rows, cols, data)
}

pub fn write_gft(path: &Path, m: &FeatureMatrix) -> Result<()> {
    fs::write(path, encode_gft(m)).map_err(|e| Error::io(path, e))
}

pub fn read_gft(path: &Path) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_gft(&bytes, path)
}

/// Rounds every entry through `f32`, the storage precision.
pub fn quantize_f32(m: FeatureMatrix) -> FeatureMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    let data = m.into_data().into_iter().map(|x| x as f32 as f64).collect();
    FeatureMatrix::new(rows, cols, data).expect("quantized features stay finite")
}

fn write_text(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn save_dataset(ds: &GraphDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join("edges.csv"), |w| {
        writeln!(w, "src,dst")?;
        for &(u, v) in ds.graph.edges() {
            writeln!(w, "{u},{v}")?;
        }
        Ok(())
    })?;
    write_gft(&dir.join("features.gft"), &ds.features)?;
    let labels_path = dir.join("labels.csv");
    match &ds.labels {
        Some(labels) => write_text(&labels_path, |w| {
            writeln!(w, "node,label")?;
            for (i, l) in labels.iter().enumerate() {
                writeln!(w, "{i},{l}")?;
            }
            Ok(())
        })?,
        None if labels_path.exists() => {
            fs::remove_file(&labels_path).map_err(|e| Error::io(&labels_path, e))?
        }
        None => {}
    }
    let mut meta = KvFile::new();
    meta.push("name", &ds.name);
    meta.push("num_nodes", ds.num_nodes());
    meta.push("num_edges", ds.graph.num_edges());
    meta.push("feature_dim", ds.features.cols());
    meta.push("labels", ds.labels.is_some());
    for (k, v) in ds.provenance.entries() {
        meta.push(format!("prov.{k}"), v);
    }
    meta.write(&dir.join("meta.txt"))
}

fn parse_pair(line: &str) -> Option<(usize, usize)> {
    let (a, b) = line.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn read_edges_strict(path: &Path, num_nodes: usize) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "src,dst")) => {}
        _ => return Err(Error::format(path, "line 1: expected header src,dst")),
    }
    let mut edges = Vec::new();
    let mut prev: Option<(usize, usize)> = None;
    for (i, line) in lines {
        let lineno = i + 1;
        let (u, v) = parse_pair(line)
            .ok_or_else(|| Error::format(path, format!("line {lineno}: expected src,dst, got {line:?}")))?;
        if u == v {
            return Err(Error::format(path, format!("line {lineno}: self-loop on node {u}")));
        }
        if u > v {
            return Err(Error::format(
                path,
                format!("line {lineno}: edge ({u},{v}) must be listed with src < dst"),
            ));
        }
        if v >= num_nodes {
            return Err(Error::format(
                path,
                format!("line {lineno}: node {v} outside 0..{num_nodes}"),
            ));
        }
        if prev.is_some_and(|p| p >= (u, v)) {
            return Err(Error::format(
                path,
                format!("line {lineno}: edge ({u},{v}) duplicated or out of order"),
            ));
        }
        prev = Some((u, v));
        edges.push((u, v));
    }
    Graph::from_edges(num_nodes, &edges).map_err(|e| Error::format(path, e.to_string()))
}

fn read_labels(path: &Path, num_nodes: usize) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "node,label")) => {}
        _ => return Err(Error::format(path, "line 1: expected header node,label")),
    }
    let mut labels = vec![None; num_nodes];
    for (i, line) in lines {
        let lineno = i + 1;
        let (node, label) = parse_pair(line)
            .ok_or_else(|| Error::format(path, format!("line {lineno}: expected node,label")))?;
        if node >= num_nodes {
            return Err(Error::format(path, format!("line {lineno}: node {node} outside 0..{num_nodes}")));
        }
        if labels[node].replace(label).is_some() {
            return Err(Error::format(path, format!("line {lineno}: node {node} labeled twice")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::format(path, format!("node {i} has no label"))))
        .collect()
}

pub fn load_dataset(dir: &Path) -> Result<GraphDataset> {
    let meta_path = dir.join("meta.txt");
    let meta = KvFile::read(&meta_path)?;
    let features_path = dir.join("features.gft");
    let features = read_gft(&features_path)?;
    if let Some(n) = meta.parsed::<usize>("num_nodes", &meta_path)? {
        if n != features.rows() {
            return Err(Error::format(
                &features_path,
                format!("{} feature rows but meta.txt declares {n} nodes", features.rows()),
            ));
        }
    }
    let graph = read_edges_strict(&dir.join("edges.csv"), features.rows())?;
    let labels_path = dir.join("labels.csv");
    let labels = if labels_path.exists() {
        Some(read_labels(&labels_path, graph.num_nodes())?)
    } else {
        None
    };
    let mut provenance = Provenance::default();
    for (k, v) in meta.entries() {
        if let Some(k) = k.strip_prefix("prov.") {
            provenance.push(k, v);
        }
    }
    let name = meta.get("name").unwrap_or("dataset").to_string();
    GraphDataset::new(name, graph, features, labels, provenance)
        .map_err(|e| Error::format(dir, e.to_string()))
}

fn is_header(line: &str) -> bool {
    line.split(',').any(|t| t.trim().parse::<f64>().is_err())
}

/// Feature CSV: one row per node. When the header's first column is `id`,
/// that column carries the node id; otherwise the row index does.
fn read_feature_csv(path: &Path) -> Result<(Vec<i64>, FeatureMatrix)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
    let mut has_id = false;
    if let Some((_, first)) = lines.peek() {
        if is_header(first) {
            has_id = first.split(',').next().map(str::trim) == Some("id");
            lines.next();
        }
    }
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut cols = None;
    for (i, line) in lines {
        let lineno = i + 1;
        let mut values = Vec::new();
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| {
                Error::format(path, format!("line {lineno}: cannot parse {:?} as a number", tok.trim()))
            })?;
            values.push(v);
        }
        if has_id {
            let id = values.remove(0);
            if id.fract() != 0.0 {
                return Err(Error::format(path, format!("line {lineno}: non-integer id {id}")));
            }
            ids.push(id as i64);
        } else {
            ids.push(ids.len() as i64);
        }
        match cols {
            None => cols = Some(values.len()),
            Some(c) if c != values.len() => {
                return Err(Error::format(
                    path,
                    format!("line {lineno}: ragged row with {} values, expected {c}", values.len()),
                ))
            }
            _ => {}
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::format(path, format!("line {lineno}: non-finite value {v}")));
        }
        data.extend(values);
    }
    let rows = ids.len();
    let cols = cols.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(Error::format(path, "no feature rows"));
    }
    Ok((ids, FeatureMatrix::new(rows, cols, data)?))
}

fn read_pairs_loose(path: &Path) -> Result<Vec<(i64, i64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && is_header(line)) {
            continue;
        }
        let parsed = line.split_once(',').and_then(|(a, b)| {
            Some((a.trim().parse::<i64>().ok()?, b.trim().parse::<i64>().ok()?))
        });
        out.push(parsed.ok_or_else(|| {
            Error::format(path, format!("line {}: expected two integer columns, got {line:?}", i + 1))
        })?);
    }
    Ok(out)
}

/// Imports an external dataset.
///
/// Node ids are the feature rows (or the feature CSV's `id` column), compacted
/// to `0..n` in ascending original-id order. Edges are symmetrized; self-loops
/// and duplicates are dropped with a warning. Labels (`node,label`, original
/// ids) are compacted to `0..C` in ascending label order.
pub fn import_external(
    edges: &Path,
    features: &Path,
    labels: Option<&Path>,
) -> Result<GraphDataset> {
    let (raw_ids, matrix) = if features.extension().is_some_and(|e| e == "gft") {
        let m = read_gft(features)?;
        ((0..m.rows() as i64).collect(), m)
    } else {
        read_feature_csv(features)?
    };
    let mut order: Vec<usize> = (0..raw_ids.len()).collect();
    order.sort_by_key(|&r| raw_ids[r]);
    let mut id_map = BTreeMap::new();
    for (new, &row) in order.iter().enumerate() {
        if id_map.insert(raw_ids[row], new).is_some() {
            return Err(Error::format(features, format!("node id {} appears twice", raw_ids[row])));
        }
    }
    let matrix = if order.iter().enumerate().all(|(i, &r)| i == r) {
        matrix
    } else {
        matrix.select_rows(&order)
    };
    let n = matrix.rows();

    let lookup = |id: i64, path: &Path| {
        id_map
            .get(&id)
            .copied()
            .ok_or_else(|| Error::format(path, format!("node id {id} has no feature row")))
    };
    let mut pairs = Vec::new();
    for (a, b) in read_pairs_loose(edges)? {
        pairs.push((lookup(a, edges)?, lookup(b, edges)?));
    }
    let (graph, self_loops, duplicates) = Graph::from_edges_lossy(n, &pairs)?;
    if self_loops + duplicates > 0 {
        log::warn!(
            "{}: dropped {self_loops} self-loops and {duplicates} duplicate edges",
            edges.display()
        );
    }

    let labels_file = labels;
    let labels = match labels {
        None => None,
        Some(path) => {
            let mut raw = vec![None; n];
            for (node, label) in read_pairs_loose(path)? {
                let i = lookup(node, path)?;
                if raw[i].replace(label).is_some() {
                    return Err(Error::format(path, format!("node {node} labeled twice")));
                }
            }
            let mut classes: Vec<i64> = raw.iter().flatten().copied().collect();
            classes.sort_unstable();
            classes.dedup();
            let mut out = Vec::with_capacity(n);
            for (i, l) in raw.into_iter().enumerate() {
                let l = l.ok_or_else(|| Error::format(path, format!("node {i} has no label")))?;
                out.push(classes.binary_search(&l).unwrap());
            }
            Some(out)
        }
    };

    let mut prov = Provenance::default();
    prov.push("source", "import");
    prov.push("edges_file", edges.display());
    prov.push("features_file", features.display());
    if let Some(path) = labels_file {
        prov.push("labels_file", path.display());
    }
    prov.push("dropped_self_loops", self_loops);
    prov.push("dropped_duplicates", duplicates);
    let name = features
        .parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "imported".to_string());
    GraphDataset::new(name, graph, matrix, labels, prov)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> GraphDataset {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let f = FeatureMatrix::new(3, 2, vec![0.5, -1.0, 2.0, 0.25, 0.0, 8.0]).unwrap();
        let mut p = Provenance::default();
        p.push("seed", 4);
        GraphDataset::new("tri", g, f, Some(vec![0, 1, 1]), p).unwrap()
    }

    #[test]
    fn header_is_28_bytes() {
        let m = FeatureMatrix::zeros(3, 5);
        let bytes = encode_gft(&m);
        assert_eq!(bytes.len(), GFT_HEADER_LEN + 3 * 5 * 4);
        assert_eq!(&bytes[..4], b"GFT1");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(&bytes[12..20], &3u64.to_le_bytes());
        assert_eq!(&bytes[20..28], &5u64.to_le_bytes());
    }

    #[test]
    fn gft_rejects_bad_input() {
        let p = Path::new("x.gft");
        let mut bytes = encode_gft(&FeatureMatrix::zeros(2, 2));
        assert!(decode_gft(&bytes[..10], p).is_err());
        bytes.pop();
        assert!(decode_gft(&bytes, p).is_err());
        let mut bad = encode_gft(&FeatureMatrix::zeros(2, 2));
        bad[0] = b'X';
        assert!(decode_gft(&bad, p).unwrap_err().to_string().contains("magic"));
        let mut nan = encode_gft(&FeatureMatrix::zeros(1, 1));
        nan[28..32].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode_gft(&nan, p).is_err());
    }

    #[test]
    fn triangle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = triangle();
        save_dataset(&ds, dir.path()).unwrap();
        let edges = fs::read_to_string(dir.path().join("edges.csv")).unwrap();
        assert_eq!(edges, "src,dst\n0,1\n0,2\n1,2\n");
        assert_eq!(edges.lines().skip(1).count(), 3);
        assert_eq!(load_dataset(dir.path()).unwrap(), ds);
    }

    #[test]
    fn self_loop_rejected_with_line() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&triangle(), dir.path()).unwrap();
        fs::write(dir.path().join("edges.csv"), "src,dst\n0,1\n2,2\n").unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn row_count_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&triangle(), dir.path()).unwrap();
        write_gft(&dir.path().join("features.gft"), &FeatureMatrix::zeros(4, 2)).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Format { .. })));
    }

    #[test]
    fn import_symmetrizes_and_keeps_isolated() {
        let dir = tempfile::tempdir().unwrap();
        let e = dir.path().join("e.csv");
        let f = dir.path().join("f.csv");
        fs::write(&e, "src,dst\n0,1\n1,0\n1,1\n").unwrap();
        fs::write(&f, "1,2\n3,4\n5,6\n").unwrap();
        let ds = import_external(&e, &f, None).unwrap();
        assert_eq!(ds.graph.edges(), &[(0, 1)]);
        assert_eq!(ds.graph.degree(2), 0);
        assert_eq!(ds.provenance.get("dropped_self_loops"), Some("1"));
    }

    #[test]
    fn import_ragged_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let e = dir.path().join("e.csv");
        let f = dir.path().join("f.csv");
        fs::write(&e, "0,1\n").unwrap();
        fs::write(&f, "1,2\n3\n").unwrap();
        let err = import_external(&e, &f, None).unwrap_err();
        assert!(err.to_string().contains("ragged"), "{err}");
    }

    #[test]
    fn import_compacts_sparse_ids() {
        let dir = tempfile::tempdir().unwrap();
        let e = dir.path().join("e.csv");
        let f = dir.path().join("f.csv");
        let l = dir.path().join("l.csv");
        fs::write(&e, "src,dst\n30,10\n").unwrap();
        fs::write(&f, "id,a\n30,3.0\n10,1.0\n20,2.0\n").unwrap();
        fs::write(&l, "node,label\n10,7\n20,9\n30,7\n").unwrap();
        let ds = import_external(&e, &f, Some(&l)).unwrap();
        assert_eq!(ds.features.data(), &[1.0, 2.0, 3.0]);
        assert_eq!(ds.graph.edges(), &[(0, 2)]);
        assert_eq!(ds.labels, Some(vec![0, 1, 0]));
    }
}
