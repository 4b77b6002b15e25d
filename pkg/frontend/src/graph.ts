/**
 * Client-side graph view model.
 *
 * Holds the scene graph plus presentation state (layout positions,
 * selection, dirty flag). Serializing drops the presentation state and
 * yields a document the service accepts verbatim. Every mutating gesture
 * also returns its toolchain edit-op JSON so an ops log can be exported.
 *
 * No prompt logic lives here: captions always come from the service.
 */

import type { EditOpDoc, SceneGraphDoc } from "./types.js";

export interface ViewNode {
  id: string;
  name: string;
  attributes: string[];
  x: number;
  y: number;
}

export interface ViewRelation {
  subjectId: string;
  predicate: string;
  objectId: string;
}

/** Same normalization the service applies: trim, lowercase, collapse runs. */
export function canonicalizeText(raw: string): string {
  return raw.trim().toLowerCase().replace(/\s+/g, " ");
}

export function phraseOf(node: { name: string; attributes: string[] }): string {
  return [...node.attributes, node.name].join(" ");
}

/** Canonical relation keys of a graph document (for round-trip checks). */
export function canonicalRelationKeys(doc: SceneGraphDoc): string[] {
  const byId = new Map(
    doc.objects.map((o) => [
      o.id,
      { name: canonicalizeText(o.name), attributes: (o.attributes ?? []).map(canonicalizeText) },
    ]),
  );
  return doc.relations.map((r) => {
    const subject = byId.get(r.subject_id);
    const object = byId.get(r.object_id);
    if (!subject || !object) throw new Error(`relation references unknown id ${r.subject_id}/${r.object_id}`);
    return `${phraseOf(subject)} | ${canonicalizeText(r.predicate)} | ${phraseOf(object)}`;
  });
}

export class GestureError extends Error {}

export class GraphViewModel {
  nodes: ViewNode[] = [];
  relations: ViewRelation[] = [];
  selectedNodeId: string | null = null;
  dirty = false;

  static fromDoc(doc: SceneGraphDoc): GraphViewModel {
    const vm = new GraphViewModel();
    vm.nodes = doc.objects.map((o) => ({
      id: o.id,
      name: canonicalizeText(o.name),
      attributes: (o.attributes ?? []).map(canonicalizeText).filter(Boolean),
      x: 0,
      y: 0,
    }));
    vm.relations = doc.relations.map((r) => ({
      subjectId: r.subject_id,
      predicate: canonicalizeText(r.predicate),
      objectId: r.object_id,
    }));
    return vm;
  }

  /** Presentation state (layout, selection, dirty) never reaches the wire. */
  toDoc(): SceneGraphDoc {
    return {
      objects: this.nodes.map((n) => ({ id: n.id, name: n.name, attributes: [...n.attributes] })),
      relations: this.relations.map((r) => ({
        subject_id: r.subjectId,
        predicate: r.predicate,
        object_id: r.objectId,
      })),
    };
  }

  clone(): GraphViewModel {
    const vm = GraphViewModel.fromDoc(this.toDoc());
    for (const [i, node] of vm.nodes.entries()) {
      node.x = this.nodes[i]!.x;
      node.y = this.nodes[i]!.y;
    }
    vm.dirty = this.dirty;
    vm.selectedNodeId = this.selectedNodeId;
    return vm;
  }

  node(id: string): ViewNode {
    const node = this.nodes.find((n) => n.id === id);
    if (!node) throw new GestureError(`no node ${id}`);
    return node;
  }

  private freshId(): string {
    let i = this.nodes.length;
    const taken = new Set(this.nodes.map((n) => n.id));
    while (taken.has(`o${++i}`)) {
      /* keep scanning */
    }
    return `o${i}`;
  }

  // -- gestures, each returning the toolchain edit op it maps to -------------

  renameNode(id: string, newName: string): EditOpDoc {
    const name = canonicalizeText(newName);
    if (!name) throw new GestureError("name cannot be empty");
    this.node(id).name = name;
    this.dirty = true;
    return { kind: "replace_node_name", node: { id }, new_name: name };
  }

  setAttributes(id: string, attributes: string[]): EditOpDoc {
    const cleaned = attributes.map(canonicalizeText).filter(Boolean);
    this.node(id).attributes = cleaned;
    this.dirty = true;
    return { kind: "set_attributes", node: { id }, attributes: cleaned };
  }

  addNode(name: string): ViewNode {
    const canon = canonicalizeText(name);
    if (!canon) throw new GestureError("name cannot be empty");
    const node = { id: this.freshId(), name: canon, attributes: [], x: 0, y: 0 };
    this.nodes.push(node);
    this.dirty = true;
    return node;
  }

  addRelation(subjectId: string, predicate: string, objectId: string): EditOpDoc {
    const canon = canonicalizeText(predicate);
    if (!canon) throw new GestureError("predicate cannot be empty");
    if (subjectId === objectId) throw new GestureError("a node cannot relate to itself");
    this.node(subjectId);
    this.node(objectId);
    const duplicate = this.relations.some(
      (r) => r.subjectId === subjectId && r.predicate === canon && r.objectId === objectId,
    );
    if (duplicate) throw new GestureError("that relation already exists");
    this.relations.push({ subjectId, predicate: canon, objectId });
    this.dirty = true;
    return {
      kind: "add_relation",
      subject: { id: subjectId },
      predicate: canon,
      object: { id: objectId },
    };
  }

  deleteRelation(index: number): EditOpDoc {
    const relation = this.relations[index];
    if (!relation) throw new GestureError(`no relation at index ${index}`);
    this.relations.splice(index, 1);
    this.dirty = true;
    return {
      kind: "remove_relation",
      subject: { id: relation.subjectId },
      predicate: relation.predicate,
      object: { id: relation.objectId },
    };
  }

  deleteNode(id: string): EditOpDoc {
    this.node(id);
    this.nodes = this.nodes.filter((n) => n.id !== id);
    this.relations = this.relations.filter((r) => r.subjectId !== id && r.objectId !== id);
    if (this.selectedNodeId === id) this.selectedNodeId = null;
    this.dirty = true;
    return { kind: "remove_node", node: { id } };
  }
}

export function exportGraph(vm: GraphViewModel): string {
  return JSON.stringify(vm.toDoc(), null, 2);
}

export function importGraph(text: string): GraphViewModel {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (err) {
    throw new GestureError(`not valid JSON: ${err}`);
  }
  const candidate = doc as SceneGraphDoc;
  if (!Array.isArray(candidate.objects) || !Array.isArray(candidate.relations)) {
    throw new GestureError("graph JSON needs 'objects' and 'relations' arrays");
  }
  canonicalRelationKeys(candidate); // validates id references
  return GraphViewModel.fromDoc(candidate);
}
