// Minimal mounter: replaces the root's children with the rendered tree on
// every update. The panel is small enough that diffing would be vanity.

import type { VNode } from './view.js';

export function toElement(node: VNode | string, doc: Document): Node {
  if (typeof node === 'string') return doc.createTextNode(node);
  const el = doc.createElement(node.tag);
  for (const [name, value] of Object.entries(node.attrs)) {
    if (name === 'value' && el instanceof HTMLInputElement) {
      el.value = value;
    } else {
      el.setAttribute(name, value);
    }
  }
  if (node.on) {
    for (const [event, handler] of Object.entries(node.on)) {
      el.addEventListener(event, (domEvent) => {
        if (event === 'submit') domEvent.preventDefault();
        handler(domEvent);
      });
    }
  }
  for (const child of node.children) {
    el.appendChild(toElement(child, doc));
  }
  return el;
}

export function mount(root: Element, tree: VNode) {
  const doc = root.ownerDocument;
  const active = doc.activeElement;
  const activeId = active instanceof HTMLElement ? active.id : null;
  const selection = active instanceof HTMLInputElement
    ? { start: active.selectionStart, end: active.selectionEnd }
    : null;

  root.replaceChildren(toElement(tree, doc));

  // keep the caret where the user left it across re-renders
  if (activeId) {
    const again = doc.getElementById(activeId);
    if (again instanceof HTMLElement) {
      again.focus();
      if (again instanceof HTMLInputElement && selection) {
        again.setSelectionRange(selection.start, selection.end);
      }
    }
  }
}
