use std::fmt::Write;

use crate::model::{NodeKind, TreeFile, TreeNode};

fn quote(s: &str) -> String {
    format!(
        "\"{}\"",
        s.replace('\\', "\\\\")
            .replace('"', "\\\"")
            .replace('\n', "\\n")
    )
}

fn attrs(n: &TreeNode) -> String {
    let star = if n.memory { "*" } else { "" };
    let (shape, fill, label) = match &n.kind {
        NodeKind::Selector => ("octagon", "#00FFFF", format!("?{star}")),
        NodeKind::Sequence => ("box", "#FFA500", format!("->{star}")),
        NodeKind::ParallelOne => ("trapezium", "#FFD700", format!("||1{star}")),
        NodeKind::ParallelAll => ("trapezium", "#FFD700", format!("||A{star}")),
        NodeKind::Decorator(m) => {
            let pairs: Vec<String> = m
                .changes()
                .iter()
                .map(|(a, b)| format!("{a}->{b}"))
                .collect();
            ("invtrapezium", "#FFFFFF", pairs.join(" "))
        }
        NodeKind::Action(_) => ("ellipse", "#C0C0C0", String::new()),
        NodeKind::Check(_) => ("ellipse", "#C0C0C0", String::new()),
    };
    let label = if label.is_empty() {
        n.name.clone()
    } else {
        format!("{}\n{label}", n.name)
    };
    let font = if matches!(n.kind, NodeKind::Check(_)) {
        ", fontcolor=\"red\""
    } else {
        ""
    };
    format!(
        "shape={shape}, style=filled, fillcolor=\"{fill}\", label={}{font}",
        quote(&label)
    )
}

fn emit(n: &TreeNode, out: &mut String) {
    writeln!(out, "  {} [{}];", quote(&n.name), attrs(n)).unwrap();
    for c in &n.children {
        emit(c, out);
        writeln!(out, "  {} -> {};", quote(&n.name), quote(&c.name)).unwrap();
    }
}

/// Graphviz rendering of the nominal tree and, if present, the contingency tree.
pub fn to_dot(f: &TreeFile) -> String {
    let name = f.sbt.name.as_deref().unwrap_or("sbt");
    let mut out = format!(
        "digraph {} {{\n  node [fontname=\"Helvetica\"];\n",
        quote(name)
    );
    emit(&f.sbt.root, &mut out);
    if let Some(c) = &f.contingency {
        emit(c, &mut out);
    }
    out.push_str("}\n");
    out
}
