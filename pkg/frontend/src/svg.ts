/**
 * A tiny virtual-DOM for SVG: renderers build plain trees, the app turns
 * them into markup (or live elements), and tests assert on structure
 * directly — e.g. "these two trees differ only in paint attributes".
 */

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  children: (VNode | string)[];
}

export function h(
  tag: string,
  attrs: Record<string, string> = {},
  children: (VNode | string)[] = [],
): VNode {
  return { tag, attrs, children };
}

const ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
};

export function escapeXml(text: string): string {
  return text.replace(/[&<>"]/g, (c) => ESCAPES[c] ?? c);
}

export function renderToString(node: VNode): string {
  const attrs = Object.entries(node.attrs)
    .map(([name, value]) => ` ${name}="${escapeXml(value)}"`)
    .join("");
  if (node.children.length === 0) {
    return `<${node.tag}${attrs}/>`;
  }
  const inner = node.children
    .map((child) =>
      typeof child === "string" ? escapeXml(child) : renderToString(child),
    )
    .join("");
  return `<${node.tag}${attrs}>${inner}</${node.tag}>`;
}

/** Deep copy with the named attributes removed (paint-independence checks). */
export function stripAttrs(node: VNode, names: ReadonlySet<string>): VNode {
  const attrs: Record<string, string> = {};
  for (const [name, value] of Object.entries(node.attrs)) {
    if (!names.has(name)) {
      attrs[name] = value;
    }
  }
  return {
    tag: node.tag,
    attrs,
    children: node.children.map((child) =>
      typeof child === "string" ? child : stripAttrs(child, names),
    ),
  };
}

/** Collect every value of one attribute, in document order. */
export function collectAttr(node: VNode, name: string): string[] {
  const out: string[] = [];
  const walk = (n: VNode): void => {
    const value = n.attrs[name];
    if (value !== undefined) {
      out.push(value);
    }
    for (const child of n.children) {
      if (typeof child !== "string") {
        walk(child);
      }
    }
  };
  walk(node);
  return out;
}

/** Find every element with the given tag, in document order. */
export function findAll(node: VNode, tag: string): VNode[] {
  const out: VNode[] = [];
  const walk = (n: VNode): void => {
    if (n.tag === tag) {
      out.push(n);
    }
    for (const child of n.children) {
      if (typeof child !== "string") {
        walk(child);
      }
    }
  };
  walk(node);
  return out;
}
