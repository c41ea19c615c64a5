// ── DOM helpers ─────────────────────────────────────

type Attrs = Record<string, string | boolean | ((e: Event) => void) | null>;

export const $ = (sel: string, ctx: ParentNode = document): Element | null =>
  ctx.querySelector(sel);

export const $$ = (sel: string, ctx: ParentNode = document): Element[] => [
  ...ctx.querySelectorAll(sel),
];

export function el(
  tag: string,
  attrs: Attrs = {},
  ...children: Array<string | Node | null>
): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (v == null) continue;
    if (k === "className" && typeof v === "string") node.className = v;
    else if (k.startsWith("on") && typeof v === "function")
      node.addEventListener(k.slice(2).toLowerCase(), v as EventListener);
    else if (typeof v === "boolean") {
      if (v) node.setAttribute(k, "");
    } else if (typeof v === "string") node.setAttribute(k, v);
  }
  for (const c of children) {
    if (typeof c === "string") node.appendChild(document.createTextNode(c));
    else if (c) node.appendChild(c);
  }
  return node;
}
