//! ARFF datasets: model, reader, writer, capture conversion and the
//! attribute-removal filter.
//!
//! Supported subset: `numeric` (also `real`/`integer`), nominal `{...}` and
//! `string` attributes, dense data rows, `?` for missing, `%` comments,
//! case-insensitive keywords. Sparse rows and `date`/`relational` attributes
//! are rejected with [`ArffError::UnsupportedFeature`].

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Read, Write};

use thiserror::Error;

use crate::ingest::CaptureBatch;
use crate::text::{quote, Lexer, Token};

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeKind {
    Numeric,
    Nominal(Vec<String>),
    String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn nominal<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Nominal(values.into_iter().map(Into::into).collect()),
        }
    }

    pub fn string(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::String,
        }
    }

    pub fn nominal_values(&self) -> Option<&[String]> {
        match &self.kind {
            AttributeKind::Nominal(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, AttributeKind::Numeric)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    /// Index into the attribute's nominal value list.
    Nominal(usize),
    Str(String),
    Missing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub relation: String,
    pub attributes: Vec<Attribute>,
    pub instances: Vec<Instance>,
    pub class_index: Option<usize>,
}

#[derive(Debug, Error)]
pub enum ArffError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unsupported ARFF feature: {feature}")]
    UnsupportedFeature { line: usize, feature: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("attribute position {position} out of range 1..={count}")]
    IndexOutOfRange { position: usize, count: usize },
    #[error("capture batch is empty")]
    EmptyBatch,
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Dataset {
    /// Build a dataset, checking every instance against the schema.
    pub fn new(
        relation: impl Into<String>,
        attributes: Vec<Attribute>,
        instances: Vec<Instance>,
        class_index: Option<usize>,
    ) -> Result<Self, ArffError> {
        let d = Self {
            relation: relation.into(),
            attributes,
            instances,
            class_index,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ArffError> {
        for a in &self.attributes {
            if let AttributeKind::Nominal(values) = &a.kind {
                if values.is_empty() {
                    return Err(ArffError::Invalid(format!("nominal attribute {:?} has no values", a.name)));
                }
                let distinct: BTreeSet<&String> = values.iter().collect();
                if distinct.len() != values.len() {
                    return Err(ArffError::Invalid(format!("nominal attribute {:?} repeats a value", a.name)));
                }
            }
        }
        if let Some(ci) = self.class_index {
            match self.attributes.get(ci) {
                Some(a) if a.nominal_values().is_some() => {}
                _ => return Err(ArffError::Invalid(format!("class index {ci} is not a nominal attribute"))),
            }
        }
        for (row, inst) in self.instances.iter().enumerate() {
            if inst.values.len() != self.attributes.len() {
                return Err(ArffError::Invalid(format!(
                    "instance {row} has {} values, expected {}",
                    inst.values.len(),
                    self.attributes.len()
                )));
            }
            for (v, a) in inst.values.iter().zip(&self.attributes) {
                let ok = match (v, &a.kind) {
                    (Value::Missing, _) => true,
                    (Value::Number(x), AttributeKind::Numeric) => x.is_finite(),
                    (Value::Nominal(i), AttributeKind::Nominal(vals)) => *i < vals.len(),
                    (Value::Str(_), AttributeKind::String) => true,
                    _ => false,
                };
                if !ok {
                    return Err(ArffError::Invalid(format!(
                        "instance {row}: value {v:?} does not fit attribute {:?}",
                        a.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn num_instances(&self) -> usize {
        self.instances.len()
    }

    /// Select the class attribute by name.
    pub fn with_class(mut self, name: &str) -> Result<Self, ArffError> {
        let idx = self
            .attribute_index(name)
            .ok_or_else(|| ArffError::UnknownAttribute(name.to_string()))?;
        self.class_index = Some(idx);
        self.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ConvertOptions {
    /// Type `Info` as nominal instead of string.
    pub info_as_nominal: bool,
}

#[derive(Default)]
struct NominalBuilder {
    values: Vec<String>,
    index: HashMap<String, usize>,
}

impl NominalBuilder {
    fn intern(&mut self, v: &str) -> usize {
        if let Some(&i) = self.index.get(v) {
            return i;
        }
        let i = self.values.len();
        self.values.push(v.to_string());
        self.index.insert(v.to_string(), i);
        i
    }
}

/// Turn a packet batch into the seven-attribute capture dataset.
///
/// Nominal value lists are ordered by first appearance in the batch.
pub fn from_capture(batch: &CaptureBatch, options: ConvertOptions) -> Result<Dataset, ArffError> {
    if batch.is_empty() {
        return Err(ArffError::EmptyBatch);
    }
    let mut source = NominalBuilder::default();
    let mut destination = NominalBuilder::default();
    let mut protocol = NominalBuilder::default();
    let mut info = NominalBuilder::default();
    let instances = batch
        .records
        .iter()
        .map(|r| Instance {
            values: vec![
                Value::Number(r.no as f64),
                Value::Number(r.time),
                Value::Nominal(source.intern(&r.source)),
                Value::Nominal(destination.intern(&r.destination)),
                Value::Nominal(protocol.intern(&r.protocol)),
                Value::Number(f64::from(r.length)),
                if options.info_as_nominal {
                    Value::Nominal(info.intern(&r.info))
                } else {
                    Value::Str(r.info.clone())
                },
            ],
        })
        .collect();
    let info_attr = if options.info_as_nominal {
        Attribute::nominal("Info", info.values)
    } else {
        Attribute::string("Info")
    };
    Dataset::new(
        batch.label.clone(),
        vec![
            Attribute::numeric("No."),
            Attribute::numeric("Time"),
            Attribute::nominal("Source", source.values),
            Attribute::nominal("Destination", destination.values),
            Attribute::nominal("Protocol", protocol.values),
            Attribute::numeric("Length"),
            info_attr,
        ],
        instances,
        None,
    )
}

fn write_value<W: Write>(sink: &mut W, v: &Value, attr: &Attribute) -> std::io::Result<()> {
    match v {
        Value::Missing => sink.write_all(b"?"),
        Value::Number(x) => write!(sink, "{x}"),
        Value::Nominal(i) => {
            let vals = attr.nominal_values().expect("validated nominal");
            sink.write_all(quote(&vals[*i]).as_bytes())
        }
        Value::Str(s) => sink.write_all(quote(s).as_bytes()),
    }
}

/// Write `d` as ARFF text.
pub fn write_arff<W: Write>(d: &Dataset, sink: W) -> Result<(), ArffError> {
    let mut w = std::io::BufWriter::new(sink);
    writeln!(w, "@relation {}", quote(&d.relation))?;
    writeln!(w)?;
    for a in &d.attributes {
        write!(w, "@attribute {} ", quote(&a.name))?;
        match &a.kind {
            AttributeKind::Numeric => writeln!(w, "numeric")?,
            AttributeKind::String => writeln!(w, "string")?,
            AttributeKind::Nominal(values) => {
                let list: Vec<_> = values.iter().map(|v| quote(v)).collect();
                writeln!(w, "{{{}}}", list.join(","))?;
            }
        }
    }
    writeln!(w)?;
    writeln!(w, "@data")?;
    for inst in &d.instances {
        for (i, (v, a)) in inst.values.iter().zip(&d.attributes).enumerate() {
            if i > 0 {
                w.write_all(b",")?;
            }
            write_value(&mut w, v, a)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn syntax(line: usize, reason: impl Into<String>) -> ArffError {
    ArffError::Syntax {
        line,
        reason: reason.into(),
    }
}

fn keyword<'a>(lexer: &mut Lexer<'a>) -> String {
    lexer.skip_ws();
    let rest = lexer.rest();
    let end = rest.find(|c: char| c.is_whitespace()).unwrap_or(rest.len());
    let word = rest[..end].to_ascii_lowercase();
    for _ in rest[..end].chars() {
        lexer.bump();
    }
    word
}

fn parse_attribute(line_no: usize, lexer: &mut Lexer<'_>) -> Result<Attribute, ArffError> {
    let lex = |e: crate::text::LexError| syntax(line_no, e.to_string());
    let name = lexer.token(&['{']).map_err(lex)?.text;
    lexer.skip_ws();
    let kind = if lexer.peek() == Some('{') {
        lexer.bump();
        let mut values = Vec::new();
        lexer.skip_ws();
        if lexer.peek() == Some('}') {
            return Err(syntax(line_no, "nominal attribute with no values"));
        }
        loop {
            values.push(lexer.token(&[',', '}']).map_err(lex)?.text);
            lexer.skip_ws();
            match lexer.bump() {
                Some(',') => continue,
                Some('}') => break,
                _ => return Err(syntax(line_no, "expected ',' or '}' in nominal list")),
            }
        }
        AttributeKind::Nominal(values)
    } else {
        match keyword(lexer).as_str() {
            "numeric" | "real" | "integer" => AttributeKind::Numeric,
            "string" => AttributeKind::String,
            "date" | "relational" => {
                return Err(ArffError::UnsupportedFeature {
                    line: line_no,
                    feature: "date/relational attribute".into(),
                })
            }
            "" => return Err(syntax(line_no, "missing attribute type")),
            other => return Err(syntax(line_no, format!("unknown attribute type {other:?}"))),
        }
    };
    if !lexer.at_end() {
        return Err(syntax(line_no, "trailing text after attribute declaration"));
    }
    Ok(Attribute { name, kind })
}

fn parse_cell(line_no: usize, tok: &Token, attr: &Attribute, lookup: Option<&HashMap<String, usize>>) -> Result<Value, ArffError> {
    if tok.is_missing() {
        return Ok(Value::Missing);
    }
    match &attr.kind {
        AttributeKind::Numeric => {
            let x: f64 = tok
                .text
                .parse()
                .map_err(|_| syntax(line_no, format!("{:?} is not a number", tok.text)))?;
            if !x.is_finite() {
                return Err(syntax(line_no, format!("{:?} is not finite", tok.text)));
            }
            Ok(Value::Number(x))
        }
        AttributeKind::Nominal(_) => lookup
            .and_then(|m| m.get(&tok.text))
            .map(|&i| Value::Nominal(i))
            .ok_or_else(|| {
                syntax(
                    line_no,
                    format!("{:?} is not a declared value of {:?}", tok.text, attr.name),
                )
            }),
        AttributeKind::String => Ok(Value::Str(tok.text.clone())),
    }
}

/// Read ARFF text.
pub fn parse_arff<R: Read>(input: R) -> Result<Dataset, ArffError> {
    let reader = BufReader::new(input);
    let mut relation: Option<String> = None;
    let mut attributes = Vec::new();
    let mut in_data = false;
    let mut instances = Vec::new();
    let mut lines = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| {
            if e.kind() == std::io::ErrorKind::InvalidData {
                syntax(line_no, "invalid UTF-8")
            } else {
                ArffError::Io(e)
            }
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if in_data {
            lines.push((line_no, line));
            continue;
        }
        let mut lexer = Lexer::new(&line);
        let kw = keyword(&mut lexer);
        match kw.as_str() {
            "@relation" => {
                if relation.is_some() {
                    return Err(syntax(line_no, "duplicate @relation"));
                }
                let name = lexer
                    .token(&[])
                    .map_err(|e| syntax(line_no, e.to_string()))?
                    .text;
                if !lexer.at_end() {
                    return Err(syntax(line_no, "trailing text after relation name"));
                }
                relation = Some(name);
            }
            "@attribute" => {
                if relation.is_none() {
                    return Err(syntax(line_no, "@attribute before @relation"));
                }
                attributes.push(parse_attribute(line_no, &mut lexer)?);
            }
            "@data" => {
                if relation.is_none() {
                    return Err(syntax(line_no, "@data before @relation"));
                }
                if !lexer.at_end() {
                    return Err(syntax(line_no, "trailing text after @data"));
                }
                in_data = true;
            }
            _ => return Err(syntax(line_no, format!("unexpected line {trimmed:?}"))),
        }
    }
    if !in_data {
        return Err(syntax(0, "missing @data section"));
    }

    let attrs = &attributes;
    let lookups: Vec<Option<HashMap<String, usize>>> = attrs
        .iter()
        .map(|a| {
            a.nominal_values()
                .map(|vals| vals.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect())
        })
        .collect();
    for (line_no, line) in &lines {
        let line_no = *line_no;
        let mut lexer = Lexer::new(line);
        lexer.skip_ws();
        if lexer.peek() == Some('{') {
            return Err(ArffError::UnsupportedFeature {
                line: line_no,
                feature: "sparse data row".into(),
            });
        }
        let mut values = Vec::with_capacity(attrs.len());
        loop {
            if values.len() == attrs.len() {
                return Err(syntax(line_no, format!("more than {} values", attrs.len())));
            }
            let tok = lexer
                .token(&[',', '%'])
                .map_err(|e| syntax(line_no, e.to_string()))?;
            let idx = values.len();
            values.push(parse_cell(line_no, &tok, &attrs[idx], lookups[idx].as_ref())?);
            lexer.skip_ws();
            match lexer.peek() {
                Some(',') => {
                    lexer.bump();
                }
                None | Some('%') => break,
                Some('{') => {
                    return Err(ArffError::UnsupportedFeature {
                        line: line_no,
                        feature: "instance weight".into(),
                    })
                }
                Some(c) => return Err(syntax(line_no, format!("unexpected {c:?}"))),
            }
        }
        if values.len() != attrs.len() {
            return Err(syntax(
                line_no,
                format!("expected {} values, found {}", attrs.len(), values.len()),
            ));
        }
        instances.push(Instance { values });
    }

    Dataset::new(relation.unwrap_or_default(), attributes, instances, None).map_err(|e| match e {
        ArffError::Invalid(reason) => syntax(0, reason),
        other => other,
    })
}

/// Compact WEKA-style range text, e.g. `{1,2,3,7}` → `1-3,7`.
pub fn format_range(positions: &BTreeSet<usize>) -> String {
    let mut parts = Vec::new();
    let mut iter = positions.iter().copied().peekable();
    while let Some(start) = iter.next() {
        let mut end = start;
        while iter.peek() == Some(&(end + 1)) {
            end = iter.next().unwrap_or(end);
        }
        parts.push(if start == end {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
    }
    parts.join(",")
}

/// Parse `1,2,5-7` style 1-based position lists.
pub fn parse_range(text: &str) -> Result<BTreeSet<usize>, String> {
    let mut out = BTreeSet::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let parse = |s: &str| -> Result<usize, String> {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| format!("bad position {s:?}"))
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse(a)?, parse(b)?);
                if a > b {
                    return Err(format!("empty range {part:?}"));
                }
                out.extend(a..=b);
            }
            None => {
                out.insert(parse(part)?);
            }
        }
    }
    Ok(out)
}

/// Drop the attributes at the given 1-based positions.
///
/// The relation name is annotated with the equivalent WEKA filter string
/// unless `positions` is empty, in which case the dataset is returned as is.
pub fn remove_attributes(d: &Dataset, positions: &BTreeSet<usize>) -> Result<Dataset, ArffError> {
    if let Some(&bad) = positions.iter().find(|&&p| p == 0 || p > d.attributes.len()) {
        return Err(ArffError::IndexOutOfRange {
            position: bad,
            count: d.attributes.len(),
        });
    }
    if positions.is_empty() {
        return Ok(d.clone());
    }
    let keep: Vec<usize> = (0..d.attributes.len())
        .filter(|i| !positions.contains(&(i + 1)))
        .collect();
    let attributes = keep.iter().map(|&i| d.attributes[i].clone()).collect();
    let instances = d
        .instances
        .iter()
        .map(|inst| Instance {
            values: keep.iter().map(|&i| inst.values[i].clone()).collect(),
        })
        .collect();
    let class_index = d
        .class_index
        .and_then(|ci| keep.iter().position(|&k| k == ci));
    Ok(Dataset {
        relation: format!(
            "{}-weka.filters.unsupervised.attribute.Remove-R{}",
            d.relation,
            format_range(positions)
        ),
        attributes,
        instances,
        class_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_capture_csv, ParseOptions};

    fn capture() -> CaptureBatch {
        let text = "\
1,0.0,172.21.206.1,23.213.142.1,HTTP,205,GET /
2,0.07,23.213.142.1,172.21.206.1,TCP,60,80 (http)
3,0.07,23.213.142.1,172.21.206.1,HTTP,295,HTTP/1.1 200 OK
4,0.09,172.21.206.1,117.18.232.1,TCP,66,4970 > 80
";
        parse_capture_csv(text.as_bytes(), "c.csv", "data1", &ParseOptions::default())
            .unwrap()
            .batch
    }

    #[test]
    fn capture_schema_matches_export_columns() {
        let d = from_capture(&capture(), ConvertOptions::default()).unwrap();
        let names: Vec<&str> = d.attributes.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["No.", "Time", "Source", "Destination", "Protocol", "Length", "Info"]);
        assert!(d.attributes[0].is_numeric());
        assert!(d.attributes[1].is_numeric());
        assert!(d.attributes[5].is_numeric());
        assert_eq!(d.attributes[4].nominal_values().unwrap(), ["HTTP", "TCP"]);
        assert_eq!(
            d.attributes[3].nominal_values().unwrap(),
            ["23.213.142.1", "172.21.206.1", "117.18.232.1"]
        );
        assert_eq!(d.attributes[6].kind, AttributeKind::String);
        assert_eq!(d.num_instances(), 4);

        let nominal = from_capture(&capture(), ConvertOptions { info_as_nominal: true }).unwrap();
        assert_eq!(nominal.attributes[6].nominal_values().unwrap().len(), 4);
    }

    #[test]
    fn single_record_gives_singleton_nominals() {
        let mut b = capture();
        b.records.truncate(1);
        let d = from_capture(&b, ConvertOptions::default()).unwrap();
        assert_eq!(d.num_instances(), 1);
        for a in &d.attributes {
            if let Some(v) = a.nominal_values() {
                assert_eq!(v.len(), 1);
            }
        }
    }

    #[test]
    fn empty_batch_is_rejected() {
        let mut b = capture();
        b.records.clear();
        assert!(matches!(from_capture(&b, ConvertOptions::default()), Err(ArffError::EmptyBatch)));
    }

    #[test]
    fn minimal_dataset_text() {
        let d = Dataset::new(
            "t",
            vec![Attribute::nominal("Protocol", ["TCP", "HTTP"])],
            vec![Instance { values: vec![Value::Nominal(0)] }],
            None,
        )
        .unwrap();
        let mut out = Vec::new();
        write_arff(&d, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "@relation t\n\n@attribute Protocol {TCP,HTTP}\n\n@data\nTCP\n");
    }

    #[test]
    fn empty_instance_list_writes_header_only() {
        let d = Dataset::new("e", vec![Attribute::numeric("Length")], vec![], None).unwrap();
        let mut out = Vec::new();
        write_arff(&d, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.ends_with("@data\n"));
        assert_eq!(parse_arff(text.as_bytes()).unwrap(), d);
    }

    #[test]
    fn parses_keywords_case_insensitively_with_comments() {
        let text = "% comment\n@RELATION r\n@Attribute Length NUMERIC\n@attribute 'Info text' string\n@attribute c {a,'b c'}\n@DATA\n42,'x, y',a % trailing\n?,?,'b c'\n";
        let d = parse_arff(text.as_bytes()).unwrap();
        assert_eq!(d.attributes[0], Attribute::numeric("Length"));
        assert_eq!(d.attributes[1].name, "Info text");
        assert_eq!(d.instances[0].values[1], Value::Str("x, y".into()));
        assert_eq!(d.instances[1].values, [Value::Missing, Value::Missing, Value::Nominal(1)]);
    }

    #[test]
    fn unsupported_features_are_reported() {
        let sparse = "@relation r\n@attribute a numeric\n@data\n{0 1}\n";
        assert!(matches!(
            parse_arff(sparse.as_bytes()),
            Err(ArffError::UnsupportedFeature { line: 4, .. })
        ));
        let date = "@relation r\n@attribute a date 'yyyy'\n@data\n";
        assert!(matches!(parse_arff(date.as_bytes()), Err(ArffError::UnsupportedFeature { .. })));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let bad = "@relation r\n@attribute a numeric\n@data\n1\nabc\n";
        match parse_arff(bad.as_bytes()) {
            Err(ArffError::Syntax { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let undeclared = "@relation r\n@attribute a {x}\n@data\ny\n";
        assert!(matches!(parse_arff(undeclared.as_bytes()), Err(ArffError::Syntax { line: 4, .. })));
        let short = "@relation r\n@attribute a numeric\n@attribute b numeric\n@data\n1\n";
        assert!(parse_arff(short.as_bytes()).is_err());
    }

    #[test]
    fn remove_keeps_destination_protocol_length() {
        let d = from_capture(&capture(), ConvertOptions::default()).unwrap();
        let positions: BTreeSet<usize> = [1, 2, 3, 7].into();
        let r = remove_attributes(&d, &positions).unwrap();
        let names: Vec<&str> = r.attributes.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["Destination", "Protocol", "Length"]);
        assert_eq!(r.num_instances(), d.num_instances());
        assert_eq!(r.relation, "data1-weka.filters.unsupervised.attribute.Remove-R1-3,7");
        assert_eq!(r.instances[1].values, [Value::Nominal(1), Value::Nominal(1), Value::Number(60.0)]);
    }

    #[test]
    fn remove_nothing_and_everything() {
        let d = from_capture(&capture(), ConvertOptions::default()).unwrap();
        assert_eq!(remove_attributes(&d, &BTreeSet::new()).unwrap(), d);
        let all: BTreeSet<usize> = (1..=7).collect();
        let r = remove_attributes(&d, &all).unwrap();
        assert!(r.attributes.is_empty());
        assert_eq!(r.num_instances(), 4);
        assert!(r.instances.iter().all(|i| i.values.is_empty()));
        assert!(matches!(
            remove_attributes(&d, &[8].into()),
            Err(ArffError::IndexOutOfRange { position: 8, count: 7 })
        ));
    }

    #[test]
    fn remove_tracks_class_index() {
        let d = from_capture(&capture(), ConvertOptions::default())
            .unwrap()
            .with_class("Protocol")
            .unwrap();
        let r = remove_attributes(&d, &[1, 2, 3, 7].into()).unwrap();
        assert_eq!(r.class_index, Some(1));
        let r = remove_attributes(&d, &[5].into()).unwrap();
        assert_eq!(r.class_index, None);
    }

    #[test]
    fn range_text() {
        assert_eq!(format_range(&[1, 2, 3, 4].into()), "1-4");
        assert_eq!(format_range(&[1, 3, 4, 7].into()), "1,3-4,7");
        assert_eq!(parse_range("1,2,3,7").unwrap(), [1, 2, 3, 7].into());
        assert_eq!(parse_range("1-3, 7").unwrap(), [1, 2, 3, 7].into());
        assert!(parse_range("0").is_err());
        assert!(parse_range("3-1").is_err());
    }
}
