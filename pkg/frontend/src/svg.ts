/** Minimal string-based SVG element builders (no DOM required). */

const XML_ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
};

export function esc(text: string): string {
  return text.replace(/[&<>"]/g, (ch) => XML_ESCAPES[ch]);
}

export type Attrs = Record<string, string | number>;

/**
 * Build one SVG element.  Attribute values are escaped; children must already
 * be valid markup (pass text content through esc at the call site).
 */
export function el(
  tag: string,
  attrs: Attrs = {},
  children: string | readonly string[] = [],
): string {
  const attrText = Object.entries(attrs)
    .map(([key, value]) => ` ${key}="${esc(String(value))}"`)
    .join("");
  const body = Array.isArray(children) ? children.join("") : String(children);
  return body === ""
    ? `<${tag}${attrText}/>`
    : `<${tag}${attrText}>${body}</${tag}>`;
}

export function textEl(attrs: Attrs, content: string): string {
  return el("text", attrs, esc(content));
}
