/**
 * SVG node-link rendering of the working graph: labeled ellipses for
 * nodes, arrows with predicate labels for relations. Click selects a
 * node; dragging moves it (presentation-only).
 */
import { phraseOf } from "./graph.js";
import { autoLayout, moveNode } from "./layout.js";
const SVG_NS = "http://www.w3.org/2000/svg";
export class GraphView {
    constructor(callbacks, width = 640, height = 420, doc = document) {
        this.callbacks = callbacks;
        this.width = width;
        this.height = height;
        this.dragging = null;
        this.vm = null;
        this.svg = doc.createElementNS(SVG_NS, "svg");
        this.svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
        this.svg.setAttribute("class", "graph-view");
        this.svg.addEventListener("pointerdown", (e) => this.onPointerDown(e));
        this.svg.addEventListener("pointermove", (e) => this.onPointerMove(e));
        this.svg.addEventListener("pointerup", () => (this.dragging = null));
        this.svg.addEventListener("pointerleave", () => (this.dragging = null));
    }
    render(vm) {
        this.vm = vm;
        autoLayout(vm, { width: this.width, height: this.height });
        this.svg.replaceChildren();
        for (const relation of vm.relations) {
            const subject = vm.node(relation.subjectId);
            const object = vm.node(relation.objectId);
            const line = this.svg.ownerDocument.createElementNS(SVG_NS, "line");
            line.setAttribute("x1", String(subject.x));
            line.setAttribute("y1", String(subject.y));
            line.setAttribute("x2", String(object.x));
            line.setAttribute("y2", String(object.y));
            line.setAttribute("class", "edge");
            this.svg.append(line);
            const label = this.svg.ownerDocument.createElementNS(SVG_NS, "text");
            label.setAttribute("x", String((subject.x + object.x) / 2));
            label.setAttribute("y", String((subject.y + object.y) / 2 - 6));
            label.setAttribute("class", "edge-label");
            label.textContent = relation.predicate;
            this.svg.append(label);
        }
        for (const node of vm.nodes) {
            this.svg.append(this.renderNode(node, vm));
        }
    }
    renderNode(node, vm) {
        const doc = this.svg.ownerDocument;
        const group = doc.createElementNS(SVG_NS, "g");
        const selected = vm.selectedNodeId === node.id;
        group.setAttribute("class", selected ? "node selected" : "node");
        group.setAttribute("data-node-id", node.id);
        group.setAttribute("transform", `translate(${node.x}, ${node.y})`);
        const ellipse = doc.createElementNS(SVG_NS, "ellipse");
        ellipse.setAttribute("rx", "52");
        ellipse.setAttribute("ry", "24");
        group.append(ellipse);
        const label = doc.createElementNS(SVG_NS, "text");
        label.setAttribute("class", "node-label");
        label.setAttribute("text-anchor", "middle");
        label.setAttribute("dy", "4");
        label.textContent = phraseOf(node);
        group.append(label);
        return group;
    }
    nodeIdAt(event) {
        let element = event.target;
        while (element && element !== this.svg) {
            const id = element.getAttribute?.("data-node-id");
            if (id)
                return id;
            element = element.parentElement;
        }
        return null;
    }
    onPointerDown(event) {
        if (!this.vm)
            return;
        const id = this.nodeIdAt(event);
        this.vm.selectedNodeId = id;
        this.callbacks.onSelect(id);
        if (id) {
            const node = this.vm.node(id);
            this.dragging = { id, dx: node.x - event.offsetX, dy: node.y - event.offsetY };
        }
        this.render(this.vm);
    }
    onPointerMove(event) {
        if (!this.vm || !this.dragging)
            return;
        moveNode(this.vm, this.dragging.id, event.offsetX + this.dragging.dx, event.offsetY + this.dragging.dy);
        this.render(this.vm);
    }
}
