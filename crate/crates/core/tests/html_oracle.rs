//! strip_html against a DOM walk over an HTML5 parser's tree.

use lemurkit::textnorm::strip_html;
use proptest::prelude::*;
use scraper::{Html, Node};

const BLOCK: &[&str] = &["div", "section", "article", "h1", "h2", "blockquote", "li", "br", "header"];
const INLINE: &[&str] = &["span", "b", "i", "em", "strong", "a"];
const HIDDEN: &[&str] = &["script", "style", "template", "title"];

#[derive(Debug, Clone)]
enum Tree {
    Text(String),
    Comment(String),
    Element { tag: String, upper: bool, attr: bool, children: Vec<Tree> },
    Hidden { tag: String, body: String },
}

fn render(t: &Tree, out: &mut String) {
    match t {
        Tree::Text(s) => out.push_str(s),
        Tree::Comment(s) => {
            out.push_str("<!-- ");
            out.push_str(s);
            out.push_str(" -->");
        }
        Tree::Element { tag, upper, attr, children } => {
            let name = if *upper { tag.to_uppercase() } else { tag.clone() };
            out.push('<');
            out.push_str(&name);
            if *attr {
                out.push_str(" class=\"c\" data-x='1 > 0'");
            }
            out.push('>');
            if tag != "br" {
                for c in children {
                    render(c, out);
                }
                out.push_str("</");
                out.push_str(&name);
                out.push('>');
            }
        }
        Tree::Hidden { tag, body } => {
            out.push_str(&format!("<{tag}>{body}</{tag}>"));
        }
    }
}

fn text_piece() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            "[A-Za-z0-9]{1,6}",
            Just(" ".to_owned()),
            Just("\n  ".to_owned()),
            Just("&amp;".to_owned()),
            Just("&lt;".to_owned()),
            Just("&gt;".to_owned()),
            Just("&quot;".to_owned()),
            Just("&#233;".to_owned()),
            Just("&#x20AC;".to_owned()),
            Just("&eacute;".to_owned()),
            Just("&nbsp;".to_owned()),
        ],
        1..6,
    )
    .prop_map(|v| v.concat())
}

fn tree() -> impl Strategy<Value = Tree> {
    let leaf = prop_oneof![
        4 => text_piece().prop_map(Tree::Text),
        1 => "[a-z ]{0,8}".prop_map(Tree::Comment),
        1 => (prop::sample::select(HIDDEN), "[a-z =;(){}]{0,12}")
            .prop_map(|(tag, body)| Tree::Hidden { tag: tag.to_owned(), body }),
    ];
    leaf.prop_recursive(4, 40, 5, |inner| {
        (
            prop::sample::select([BLOCK, INLINE].concat()),
            any::<bool>(),
            any::<bool>(),
            prop::collection::vec(inner, 0..5),
        )
            .prop_map(|(tag, upper, attr, children)| Tree::Element { tag: tag.to_owned(), upper, attr, children })
    })
}

/// Renames elements that HTML5 tree construction would close or re-parent
/// when nested in themselves (headings, list items, anchors), so the tree
/// stays one the parser keeps as written.
fn conforming(t: Tree, ancestors: &mut Vec<String>) -> Tree {
    let Tree::Element { tag, upper, attr, children } = t else { return t };
    let heading = |n: &str| matches!(n, "h1" | "h2");
    let tag = match tag.as_str() {
        h if heading(h) && ancestors.iter().any(|a| heading(a)) => "div".to_owned(),
        "li" if ancestors.iter().any(|a| a == "li") => "div".to_owned(),
        "a" if ancestors.iter().any(|a| a == "a") => "span".to_owned(),
        _ => tag,
    };
    ancestors.push(tag.clone());
    let children = children.into_iter().map(|c| conforming(c, ancestors)).collect();
    ancestors.pop();
    Tree::Element { tag, upper, attr, children }
}

fn dom_text(html: &str) -> String {
    fn walk(node: ego_tree::NodeRef<'_, Node>, out: &mut String) {
        match node.value() {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) => {
                let name = e.name();
                if HIDDEN.contains(&name) {
                    out.push('\n');
                    return;
                }
                let block = BLOCK.contains(&name) || matches!(name, "html" | "head" | "body" | "p");
                if block {
                    out.push('\n');
                }
                for c in node.children() {
                    walk(c, out);
                }
                if block {
                    out.push('\n');
                }
            }
            _ => {
                for c in node.children() {
                    walk(c, out);
                }
            }
        }
    }
    let doc = Html::parse_document(html);
    let mut out = String::new();
    walk(doc.tree.root(), &mut out);
    out
}

/// Non-empty lines with internal whitespace collapsed.
fn lines(s: &str) -> Vec<String> {
    s.split('\n')
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn matches_dom_walk(children in prop::collection::vec(tree(), 1..5)) {
        let mut html = String::from("<html><body>");
        for c in children {
            render(&conforming(c, &mut Vec::new()), &mut html);
        }
        html.push_str("</body></html>");
        prop_assert_eq!(lines(&strip_html(&html)), lines(&dom_text(&html)), "html: {}", html);
    }
}

#[test]
fn nested_document() {
    let html = "<html><head><title>T</title><style>p{}</style></head><body><div>Regulation (EU) No&nbsp;2019/1</div>\
                <p>of the <b>European</b> Parliament</p><!-- note --><div>Article 1<br>Scope</div></body></html>";
    assert_eq!(lines(&strip_html(html)), lines(&dom_text(html)));
    assert_eq!(
        lines(&strip_html(html)),
        vec!["Regulation (EU) No 2019/1", "of the European Parliament", "Article 1", "Scope"]
    );
}
