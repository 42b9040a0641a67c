//! Canonical JSON encoding of the public artifacts. All objects are built
//! through `serde_json::Value`, whose maps sort keys, and id maps are
//! emitted as sorted pair lists, so equal values always serialize to equal
//! bytes. Large integers and rationals travel as strings.

use std::collections::BTreeMap;
use std::str::FromStr;

use num::{BigInt, BigRational};
use serde_json::{json, Map, Value};

use crate::certify::{DImmersion, SurfaceCertificate};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, GraphMap, VertexId};
use crate::lp::Rational;
use crate::pair::{GraphPair, Multicycle, PairMorphism};
use crate::whitehead::{Crossing, End, WhEdge, WhGraph, WhiteheadSystem};

fn err(msg: impl Into<String>) -> Error {
    Error::Json(msg.into())
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| err(format!("missing key {key:?}")))
}

fn as_obj(v: &Value) -> Result<&Map<String, Value>> {
    v.as_object().ok_or_else(|| err("expected an object"))
}

fn as_array(v: &Value) -> Result<&Vec<Value>> {
    v.as_array().ok_or_else(|| err("expected an array"))
}

fn as_u32(v: &Value) -> Result<u32> {
    v.as_u64()
        .and_then(|n| u32::try_from(n).ok())
        .ok_or_else(|| err("expected a small nonnegative integer"))
}

fn as_i64(v: &Value) -> Result<i64> {
    v.as_i64().ok_or_else(|| err("expected an integer"))
}

fn as_usize(v: &Value) -> Result<usize> {
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| err("expected a nonnegative integer"))
}

pub fn graph_to_value(g: &Graph) -> Value {
    let vertices: Vec<Value> = g.vertices().map(|v| json!(v.0)).collect();
    let edges: Vec<Value> = g
        .edges()
        .map(|e| json!({"id": e.0, "inv": g.reverse(e).0, "origin": g.origin(e).0}))
        .collect();
    json!({"vertices": vertices, "edges": edges})
}

pub fn graph_from_value(v: &Value) -> Result<Graph> {
    let obj = as_obj(v)?;
    let mut g = Graph::new();
    for vv in as_array(get(obj, "vertices")?)? {
        g.add_vertex(VertexId(as_u32(vv)?));
    }
    let mut pairs: BTreeMap<u32, (u32, u32)> = BTreeMap::new();
    for ev in as_array(get(obj, "edges")?)? {
        let eo = as_obj(ev)?;
        let id = as_u32(get(eo, "id")?)?;
        let inv = as_u32(get(eo, "inv")?)?;
        let origin = as_u32(get(eo, "origin")?)?;
        if pairs.insert(id, (inv, origin)).is_some() {
            return Err(err(format!("duplicate edge id {id}")));
        }
    }
    let mut done = BTreeMap::new();
    for (&id, &(inv, origin)) in &pairs {
        if done.contains_key(&id) {
            continue;
        }
        let &(back, origin2) = pairs
            .get(&inv)
            .ok_or_else(|| err(format!("edge {id} has missing reverse {inv}")))?;
        if back != id || inv == id {
            return Err(err(format!("edge {id} has a broken involution")));
        }
        g.add_edge_pair(EdgeId(id), EdgeId(inv), VertexId(origin), VertexId(origin2));
        done.insert(id, ());
        done.insert(inv, ());
    }
    let violations = g.validate();
    if !violations.is_empty() {
        return Err(err(format!("invalid graph: {}", violations[0])));
    }
    Ok(g)
}

fn idmap_to_value<K: Copy, V: Copy>(
    map: &BTreeMap<K, V>,
    kf: impl Fn(K) -> u32,
    vf: impl Fn(V) -> u32,
) -> Value {
    Value::Array(
        map.iter()
            .map(|(&k, &v)| json!([kf(k), vf(v)]))
            .collect(),
    )
}

fn idmap_from_value(v: &Value) -> Result<Vec<(u32, u32)>> {
    let mut out = Vec::new();
    for entry in as_array(v)? {
        let pair = as_array(entry)?;
        if pair.len() != 2 {
            return Err(err("map entry must be a pair"));
        }
        out.push((as_u32(&pair[0])?, as_u32(&pair[1])?));
    }
    Ok(out)
}

pub fn graph_map_to_value(m: &GraphMap) -> Value {
    json!({
        "vmap": idmap_to_value(&m.vmap, |k: VertexId| k.0, |v: VertexId| v.0),
        "emap": idmap_to_value(&m.emap, |k: EdgeId| k.0, |v: EdgeId| v.0),
    })
}

pub fn graph_map_from_value(v: &Value) -> Result<GraphMap> {
    let obj = as_obj(v)?;
    let mut m = GraphMap::default();
    for (k, val) in idmap_from_value(get(obj, "vmap")?)? {
        m.vmap.insert(VertexId(k), VertexId(val));
    }
    for (k, val) in idmap_from_value(get(obj, "emap")?)? {
        m.emap.insert(EdgeId(k), EdgeId(val));
    }
    Ok(m)
}

pub fn pair_to_value(p: &GraphPair) -> Value {
    json!({
        "base": graph_to_value(&p.base),
        "circles": graph_to_value(&p.cycles.circles),
        "vmap": idmap_to_value(&p.cycles.map.vmap, |k: VertexId| k.0, |v: VertexId| v.0),
        "emap": idmap_to_value(&p.cycles.map.emap, |k: EdgeId| k.0, |v: EdgeId| v.0),
    })
}

pub fn pair_from_value(v: &Value) -> Result<GraphPair> {
    let obj = as_obj(v)?;
    let base = graph_from_value(get(obj, "base")?)?;
    let circles = graph_from_value(get(obj, "circles")?)?;
    let mut map = GraphMap::default();
    for (k, val) in idmap_from_value(get(obj, "vmap")?)? {
        map.vmap.insert(VertexId(k), VertexId(val));
    }
    for (k, val) in idmap_from_value(get(obj, "emap")?)? {
        map.emap.insert(EdgeId(k), EdgeId(val));
    }
    let pair = GraphPair { base, cycles: Multicycle { circles, map } };
    let violations = pair.validate();
    if !violations.is_empty() {
        return Err(err(format!("invalid pair: {}", violations[0])));
    }
    Ok(pair)
}

/// Parses a pair without validating it, for feeding deliberately broken
/// data to the verifier.
pub fn pair_from_value_unchecked(v: &Value) -> Result<GraphPair> {
    let obj = as_obj(v)?;
    let base = graph_from_value_unchecked(get(obj, "base")?)?;
    let circles = graph_from_value_unchecked(get(obj, "circles")?)?;
    let mut map = GraphMap::default();
    for (k, val) in idmap_from_value(get(obj, "vmap")?)? {
        map.vmap.insert(VertexId(k), VertexId(val));
    }
    for (k, val) in idmap_from_value(get(obj, "emap")?)? {
        map.emap.insert(EdgeId(k), EdgeId(val));
    }
    Ok(GraphPair { base, cycles: Multicycle { circles, map } })
}

fn graph_from_value_unchecked(v: &Value) -> Result<Graph> {
    let obj = as_obj(v)?;
    let mut g = Graph::new();
    for vv in as_array(get(obj, "vertices")?)? {
        g.add_vertex(VertexId(as_u32(vv)?));
    }
    for ev in as_array(get(obj, "edges")?)? {
        let eo = as_obj(ev)?;
        let id = as_u32(get(eo, "id")?)?;
        let inv = as_u32(get(eo, "inv")?)?;
        let origin = as_u32(get(eo, "origin")?)?;
        g.insert_raw_edge(EdgeId(id), EdgeId(inv), VertexId(origin));
    }
    Ok(g)
}

pub fn whitehead_system_to_value(ws: &WhiteheadSystem) -> Value {
    let graphs: Vec<Value> = ws
        .graphs
        .values()
        .map(|wh| {
            json!({
                "at": wh.at.0,
                "vertices": wh.vertices.iter().map(|s| json!(s.0)).collect::<Vec<_>>(),
                "edges": wh
                    .edges
                    .iter()
                    .map(|e| json!({
                        "id": e.id.0,
                        "endpoints": [e.endpoints[0].0, e.endpoints[1].0]
                    }))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    let crossings: Vec<Value> = ws
        .crossings
        .iter()
        .map(|(&e, c)| {
            json!({
                "at": e.0,
                "reverse": c.reverse.0,
                "pairs": c
                    .pairs
                    .iter()
                    .map(|(a, b)| json!([[a.edge.0, a.slot], [b.edge.0, b.slot]]))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({"graphs": graphs, "crossings": crossings})
}

fn end_from_value(v: &Value) -> Result<End> {
    let arr = as_array(v)?;
    if arr.len() != 2 {
        return Err(err("an end is a [edge, slot] pair"));
    }
    let slot = as_u32(&arr[1])?;
    if slot > 1 {
        return Err(err("slot must be 0 or 1"));
    }
    Ok(End { edge: VertexId(as_u32(&arr[0])?), slot: slot as u8 })
}

pub fn whitehead_system_from_value(v: &Value) -> Result<WhiteheadSystem> {
    let obj = as_obj(v)?;
    let mut graphs = BTreeMap::new();
    for gv in as_array(get(obj, "graphs")?)? {
        let go = as_obj(gv)?;
        let at = VertexId(as_u32(get(go, "at")?)?);
        let vertices = as_array(get(go, "vertices")?)?
            .iter()
            .map(|s| Ok(EdgeId(as_u32(s)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut edges = Vec::new();
        for ev in as_array(get(go, "edges")?)? {
            let eo = as_obj(ev)?;
            let endpoints = as_array(get(eo, "endpoints")?)?;
            if endpoints.len() != 2 {
                return Err(err("endpoints must be a pair"));
            }
            edges.push(WhEdge {
                id: VertexId(as_u32(get(eo, "id")?)?),
                endpoints: [EdgeId(as_u32(&endpoints[0])?), EdgeId(as_u32(&endpoints[1])?)],
            });
        }
        graphs.insert(at, WhGraph { at, vertices, edges });
    }
    let mut crossings = BTreeMap::new();
    for cv in as_array(get(obj, "crossings")?)? {
        let co = as_obj(cv)?;
        let at = EdgeId(as_u32(get(co, "at")?)?);
        let reverse = EdgeId(as_u32(get(co, "reverse")?)?);
        let mut pairs = Vec::new();
        for pv in as_array(get(co, "pairs")?)? {
            let pa = as_array(pv)?;
            if pa.len() != 2 {
                return Err(err("a crossing pair has two ends"));
            }
            pairs.push((end_from_value(&pa[0])?, end_from_value(&pa[1])?));
        }
        crossings.insert(at, Crossing { reverse, pairs });
    }
    Ok(WhiteheadSystem { graphs, crossings })
}

pub fn rational_to_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rational_from_string(s: &str) -> Result<Rational> {
    let (num, den) = s
        .split_once('/')
        .ok_or_else(|| err(format!("rational {s:?} must look like p/q")))?;
    let n = BigInt::from_str(num).map_err(|e| err(e.to_string()))?;
    let d = BigInt::from_str(den).map_err(|e| err(e.to_string()))?;
    if d == BigInt::from(0) {
        return Err(err("zero denominator"));
    }
    Ok(BigRational::new(n, d))
}

fn morphism_to_value(m: &PairMorphism) -> Value {
    json!({
        "base": graph_map_to_value(&m.base),
        "cycle": graph_map_to_value(&m.cycle),
    })
}

fn morphism_from_value(
    v: &Value,
    source: &GraphPair,
    target: &GraphPair,
) -> Result<PairMorphism> {
    let obj = as_obj(v)?;
    let base = graph_map_from_value(get(obj, "base")?)?;
    let cycle = graph_map_from_value(get(obj, "cycle")?)?;
    Ok(PairMorphism { source: source.clone(), target: target.clone(), base, cycle })
}

pub fn certificate_to_value(cert: &SurfaceCertificate) -> Value {
    json!({
        "reference": pair_to_value(cert.witness.reference()),
        "witness": {
            "source": pair_to_value(cert.witness.source()),
            "mid": pair_to_value(cert.witness.mid()),
            "f1": morphism_to_value(&cert.witness.f1),
            "f2": morphism_to_value(&cert.witness.f2),
        },
        "vector": cert.vector.iter().map(|c| json!(c.to_string())).collect::<Vec<_>>(),
        "fatform": pair_to_value(&cert.fatform),
        "fold_steps": cert
            .fold_steps
            .iter()
            .map(|&(a, b)| json!([a.0, b.0]))
            .collect::<Vec<_>>(),
        "euler": cert.euler,
        "boundary_count": cert.boundary_count,
        "degree": cert.degree.to_string(),
        "rho_plus": cert
            .rho_plus
            .as_ref()
            .map(|r| Value::String(rational_to_string(r)))
            .unwrap_or(Value::Null),
        "lp_basis": cert.lp_basis.iter().map(|&b| json!(b)).collect::<Vec<_>>(),
    })
}

pub fn certificate_from_value(v: &Value) -> Result<SurfaceCertificate> {
    let obj = as_obj(v)?;
    let reference = pair_from_value_unchecked(get(obj, "reference")?)?;
    let wobj = as_obj(get(obj, "witness")?)?;
    let source = pair_from_value_unchecked(get(wobj, "source")?)?;
    let mid = pair_from_value_unchecked(get(wobj, "mid")?)?;
    let f1 = morphism_from_value(get(wobj, "f1")?, &source, &mid)?;
    let f2 = morphism_from_value(get(wobj, "f2")?, &mid, &reference)?;
    let witness = DImmersion { f1, f2 };
    let vector = as_array(get(obj, "vector")?)?
        .iter()
        .map(|c| {
            let s = c.as_str().ok_or_else(|| err("vector entries are strings"))?;
            BigInt::from_str(s).map_err(|e| err(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let fatform = pair_from_value_unchecked(get(obj, "fatform")?)?;
    let mut fold_steps = Vec::new();
    for s in as_array(get(obj, "fold_steps")?)? {
        let pair = as_array(s)?;
        if pair.len() != 2 {
            return Err(err("fold step must be a pair of edges"));
        }
        fold_steps.push((EdgeId(as_u32(&pair[0])?), EdgeId(as_u32(&pair[1])?)));
    }
    let euler = as_i64(get(obj, "euler")?)?;
    let boundary_count = as_usize(get(obj, "boundary_count")?)?;
    let degree = {
        let s = get(obj, "degree")?
            .as_str()
            .ok_or_else(|| err("degree is a string"))?;
        BigInt::from_str(s).map_err(|e| err(e.to_string()))?
    };
    let rho_plus = match get(obj, "rho_plus")? {
        Value::Null => None,
        Value::String(s) => Some(rational_from_string(s)?),
        _ => return Err(err("rho_plus must be a string or null")),
    };
    let lp_basis = as_array(get(obj, "lp_basis")?)?
        .iter()
        .map(as_usize)
        .collect::<Result<Vec<_>>>()?;
    Ok(SurfaceCertificate {
        witness,
        vector,
        fatform,
        fold_steps,
        euler,
        boundary_count,
        degree,
        rho_plus,
        lp_basis,
    })
}

pub fn to_pretty_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{find_surface, SearchBudgets, SurfaceSearch};
    use crate::pair::{pair_isomorphic, parse_words};
    use crate::whitehead::whitehead_system;

    #[test]
    fn pair_json_round_trip_is_exact() {
        let p = parse_words(2, &["BabAA", "ab"]).unwrap();
        let v = pair_to_value(&p);
        let q = pair_from_value(&v).unwrap();
        assert_eq!(p, q);
        assert_eq!(to_pretty_string(&v), to_pretty_string(&pair_to_value(&q)));
    }

    #[test]
    fn whitehead_json_round_trip() {
        let p = parse_words(2, &["abAB"]).unwrap();
        let ws = whitehead_system(&p);
        let v = whitehead_system_to_value(&ws);
        let ws2 = whitehead_system_from_value(&v).unwrap();
        assert_eq!(ws, ws2);
    }

    #[test]
    fn certificate_json_round_trip() {
        let p = parse_words(2, &["abAB"]).unwrap();
        let SurfaceSearch::Report(report) = find_surface(&p, &SearchBudgets::default()).unwrap()
        else {
            panic!("expected report");
        };
        let cert = report.certificate.unwrap();
        let v = certificate_to_value(&cert);
        let cert2 = certificate_from_value(&v).unwrap();
        assert_eq!(cert.vector, cert2.vector);
        assert_eq!(cert.euler, cert2.euler);
        assert_eq!(cert.degree, cert2.degree);
        assert_eq!(cert.rho_plus, cert2.rho_plus);
        assert!(pair_isomorphic(&cert.fatform, &cert2.fatform));
        assert_eq!(
            to_pretty_string(&v),
            to_pretty_string(&certificate_to_value(&cert2))
        );
    }

    #[test]
    fn rational_strings() {
        let r = rational_from_string("3/4").unwrap();
        assert_eq!(rational_to_string(&r), "3/4");
        assert!(rational_from_string("x").is_err());
        assert!(rational_from_string("1/0").is_err());
    }

    #[test]
    fn malformed_graph_is_rejected() {
        let v = json!({"vertices": [0], "edges": [{"id": 0, "inv": 0, "origin": 0}]});
        assert!(graph_from_value(&v).is_err());
    }
}
