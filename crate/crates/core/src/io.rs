//! Plain-text formats: OBJ meshes, RFC-4180 CSV, and a small JSON model
//! with deterministic output.
//!
//! JSON objects preserve insertion order and floats are printed with 17
//! significant digits, so a value round-trips bit for bit and two runs of
//! the same computation produce byte-identical files.

use crate::error::Error;
use crate::mesh::TriMesh;
use crate::Result;
use nalgebra::Vector3;

/// Format a float with 17 significant digits, enough to reproduce the bits.
pub fn float17(x: f64) -> String {
    if x == 0.0 {
        // Collapse -0.0 so equal values print identically.
        return "0.0".to_string();
    }
    format!("{:.16e}", x)
}

// ---------------------------------------------------------------------------
// OBJ

pub fn mesh_to_obj(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        out.push_str(&format!(
            "v {} {} {}\n",
            float17(v.x),
            float17(v.y),
            float17(v.z)
        ));
    }
    for t in &mesh.triangles {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    out
}

pub fn mesh_from_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap();
        let bad = |msg: &str| Error::Format {
            what: "obj".to_string(),
            message: format!("line {}: {}", lineno + 1, msg),
        };
        match tag {
            "v" => {
                let mut coords = [0.0_f64; 3];
                for c in &mut coords {
                    *c = parts
                        .next()
                        .ok_or_else(|| bad("vertex needs 3 coordinates"))?
                        .parse()
                        .map_err(|_| bad("bad vertex coordinate"))?;
                }
                vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let mut idx = Vec::new();
                for p in parts {
                    // Accept "i", "i/j", "i/j/k" references.
                    let first = p.split('/').next().unwrap();
                    let i: i64 = first.parse().map_err(|_| bad("bad face index"))?;
                    if i <= 0 {
                        return Err(bad("only positive face indices supported"));
                    }
                    idx.push((i - 1) as usize);
                }
                if idx.len() < 3 {
                    return Err(bad("face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            // Normals, texture coordinates, groups, materials: ignored.
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles)
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180: CRLF line endings, quotes doubled)

pub fn csv_encode(rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for row in rows {
        let mut first = true;
        for field in row {
            if !first {
                out.push(',');
            }
            first = false;
            let needs_quote = field.contains(',')
                || field.contains('"')
                || field.contains('\n')
                || field.contains('\r');
            if needs_quote {
                out.push('"');
                out.push_str(&field.replace('"', "\"\""));
                out.push('"');
            } else {
                out.push_str(field);
            }
        }
        out.push_str("\r\n");
    }
    out
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    /// Key order is preserved verbatim.
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj() -> Json {
        Json::Obj(Vec::new())
    }

    pub fn push(&mut self, key: &str, value: Json) {
        if let Json::Obj(entries) = self {
            entries.push((key.to_string(), value));
        } else {
            panic!("push on non-object json value");
        }
    }

    pub fn get(&self, key: &str) -> Option<&Json> {
        if let Json::Obj(entries) = self {
            entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
        } else {
            None
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        if let Json::Str(s) = self {
            Some(s)
        } else {
            None
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Json::Num(x) => Some(*x),
            Json::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn encode(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Num(x) => {
                if x.is_finite() {
                    out.push_str(&float17(*x));
                } else if x.is_nan() {
                    out.push_str("\"nan\"");
                } else if *x > 0.0 {
                    out.push_str("\"inf\"");
                } else {
                    out.push_str("\"-inf\"");
                }
            }
            Json::Str(s) => write_json_string(out, s),
            Json::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    push_indent(out, indent + 1);
                    item.write(out, indent + 1);
                }
                out.push('\n');
                push_indent(out, indent);
                out.push(']');
            }
            Json::Obj(entries) => {
                if entries.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    push_indent(out, indent + 1);
                    write_json_string(out, k);
                    out.push_str(": ");
                    v.write(out, indent + 1);
                }
                out.push('\n');
                push_indent(out, indent);
                out.push('}');
            }
        }
    }

    pub fn parse(text: &str) -> Result<Json> {
        let bytes = text.as_bytes();
        let mut pos = 0;
        let value = parse_value(bytes, &mut pos)?;
        skip_ws(bytes, &mut pos);
        if pos != bytes.len() {
            return Err(json_err(pos, "trailing content"));
        }
        Ok(value)
    }
}

fn push_indent(out: &mut String, n: usize) {
    for _ in 0..n {
        out.push_str("  ");
    }
}

fn write_json_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn json_err(pos: usize, msg: &str) -> Error {
    Error::Format {
        what: "json".to_string(),
        message: format!("offset {pos}: {msg}"),
    }
}

fn skip_ws(b: &[u8], pos: &mut usize) {
    while *pos < b.len() && matches!(b[*pos], b' ' | b'\t' | b'\n' | b'\r') {
        *pos += 1;
    }
}

fn parse_value(b: &[u8], pos: &mut usize) -> Result<Json> {
    skip_ws(b, pos);
    if *pos >= b.len() {
        return Err(json_err(*pos, "unexpected end"));
    }
    match b[*pos] {
        b'{' => {
            *pos += 1;
            let mut entries = Vec::new();
            skip_ws(b, pos);
            if *pos < b.len() && b[*pos] == b'}' {
                *pos += 1;
                return Ok(Json::Obj(entries));
            }
            loop {
                skip_ws(b, pos);
                let key = parse_string(b, pos)?;
                skip_ws(b, pos);
                if *pos >= b.len() || b[*pos] != b':' {
                    return Err(json_err(*pos, "expected ':'"));
                }
                *pos += 1;
                let value = parse_value(b, pos)?;
                entries.push((key, value));
                skip_ws(b, pos);
                match b.get(*pos) {
                    Some(b',') => *pos += 1,
                    Some(b'}') => {
                        *pos += 1;
                        return Ok(Json::Obj(entries));
                    }
                    _ => return Err(json_err(*pos, "expected ',' or '}'")),
                }
            }
        }
        b'[' => {
            *pos += 1;
            let mut items = Vec::new();
            skip_ws(b, pos);
            if *pos < b.len() && b[*pos] == b']' {
                *pos += 1;
                return Ok(Json::Arr(items));
            }
            loop {
                items.push(parse_value(b, pos)?);
                skip_ws(b, pos);
                match b.get(*pos) {
                    Some(b',') => *pos += 1,
                    Some(b']') => {
                        *pos += 1;
                        return Ok(Json::Arr(items));
                    }
                    _ => return Err(json_err(*pos, "expected ',' or ']'")),
                }
            }
        }
        b'"' => Ok(Json::Str(parse_string(b, pos)?)),
        b't' => {
            expect(b, pos, "true")?;
            Ok(Json::Bool(true))
        }
        b'f' => {
            expect(b, pos, "false")?;
            Ok(Json::Bool(false))
        }
        b'n' => {
            expect(b, pos, "null")?;
            Ok(Json::Null)
        }
        _ => {
            let start = *pos;
            while *pos < b.len()
                && matches!(b[*pos], b'0'..=b'9' | b'-' | b'+' | b'.' | b'e' | b'E')
            {
                *pos += 1;
            }
            let text = std::str::from_utf8(&b[start..*pos]).unwrap();
            if !text.contains('.') && !text.contains('e') && !text.contains('E') {
                if let Ok(i) = text.parse::<i64>() {
                    return Ok(Json::Int(i));
                }
            }
            text.parse::<f64>()
                .map(Json::Num)
                .map_err(|_| json_err(start, "bad number"))
        }
    }
}

fn expect(b: &[u8], pos: &mut usize, word: &str) -> Result<()> {
    if b.len() >= *pos + word.len() && &b[*pos..*pos + word.len()] == word.as_bytes() {
        *pos += word.len();
        Ok(())
    } else {
        Err(json_err(*pos, "bad literal"))
    }
}

fn parse_string(b: &[u8], pos: &mut usize) -> Result<String> {
    if *pos >= b.len() || b[*pos] != b'"' {
        return Err(json_err(*pos, "expected string"));
    }
    *pos += 1;
    let mut out = String::new();
    while *pos < b.len() {
        match b[*pos] {
            b'"' => {
                *pos += 1;
                return Ok(out);
            }
            b'\\' => {
                *pos += 1;
                let c = *b.get(*pos).ok_or_else(|| json_err(*pos, "unterminated escape"))?;
                *pos += 1;
                match c {
                    b'"' => out.push('"'),
                    b'\\' => out.push('\\'),
                    b'/' => out.push('/'),
                    b'n' => out.push('\n'),
                    b'r' => out.push('\r'),
                    b't' => out.push('\t'),
                    b'b' => out.push('\u{8}'),
                    b'f' => out.push('\u{c}'),
                    b'u' => {
                        if *pos + 4 > b.len() {
                            return Err(json_err(*pos, "short unicode escape"));
                        }
                        let hex = std::str::from_utf8(&b[*pos..*pos + 4])
                            .map_err(|_| json_err(*pos, "bad unicode escape"))?;
                        let code = u32::from_str_radix(hex, 16)
                            .map_err(|_| json_err(*pos, "bad unicode escape"))?;
                        *pos += 4;
                        out.push(char::from_u32(code).unwrap_or('\u{fffd}'));
                    }
                    _ => return Err(json_err(*pos, "unknown escape")),
                }
            }
            c => {
                // Multi-byte UTF-8 sequences pass through untouched.
                let start = *pos;
                let width = utf8_width(c);
                *pos += width;
                out.push_str(std::str::from_utf8(&b[start..*pos]).map_err(|_| {
                    json_err(start, "invalid utf-8")
                })?);
            }
        }
    }
    Err(json_err(*pos, "unterminated string"))
}

fn utf8_width(first: u8) -> usize {
    match first {
        0x00..=0x7f => 1,
        0xc0..=0xdf => 2,
        0xe0..=0xef => 3,
        _ => 4,
    }
}

pub fn vector_json(v: &Vector3<f64>) -> Json {
    Json::Arr(vec![Json::Num(v.x), Json::Num(v.y), Json::Num(v.z)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_roundtrip_preserves_geometry() {
        let mesh = TriMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.25),
                Vector3::new(0.0, 1.0, -0.5),
                Vector3::new(1.0, 1.0, 0.125),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let text = mesh_to_obj(&mesh);
        let back = mesh_from_obj(&text).unwrap();
        assert_eq!(back.triangles, mesh.triangles);
        for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn obj_quads_are_triangulated() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let mesh = mesh_from_obj(text).unwrap();
        assert_eq!(mesh.triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_rejects_bad_indices() {
        assert!(mesh_from_obj("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(mesh_from_obj("f -1 -2 -3\n").is_err());
    }

    #[test]
    fn csv_quotes_only_when_needed() {
        let rows = vec![
            vec!["s".to_string(), "x,y".to_string(), "he said \"hi\"".to_string()],
            vec!["1.5".to_string(), "2".to_string(), "3".to_string()],
        ];
        let text = csv_encode(&rows);
        assert_eq!(
            text,
            "s,\"x,y\",\"he said \"\"hi\"\"\"\r\n1.5,2,3\r\n"
        );
    }

    #[test]
    fn json_roundtrip_and_order() {
        let mut obj = Json::obj();
        obj.push("name", Json::Str("residual \"max\"".to_string()));
        obj.push("value", Json::Num(1.0 / 3.0));
        obj.push("count", Json::Int(42));
        obj.push("flags", Json::Arr(vec![Json::Bool(true), Json::Null]));
        let text = obj.encode();
        let back = Json::parse(&text).unwrap();
        assert_eq!(back, obj);
        // Double encode is stable.
        assert_eq!(back.encode(), text);
        // Key order preserved.
        let name_at = text.find("name").unwrap();
        let count_at = text.find("count").unwrap();
        assert!(name_at < count_at);
    }

    #[test]
    fn float17_reproduces_bits() {
        for &x in &[
            1.0 / 3.0,
            std::f64::consts::PI,
            -2.0e-13,
            6.02e23,
            -0.0,
            4.9e-324,
        ] {
            let back: f64 = float17(x).parse().unwrap();
            assert_eq!(back.to_bits(), if x == 0.0 { 0.0_f64.to_bits() } else { x.to_bits() });
        }
    }
}
