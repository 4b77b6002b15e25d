/**
 * Before/after comparator: two stacked images with a draggable wipe line.
 * The top (edited) image is clipped from the left; slider position 0 shows
 * only the original, 1 only the edit.
 */
export class CompareSlider {
    constructor(doc = document) {
        this.root = doc.createElement("div");
        this.root.className = "compare";
        this.before = doc.createElement("img");
        this.before.className = "compare-before";
        this.before.alt = "original image";
        this.after = doc.createElement("img");
        this.after.className = "compare-after";
        this.after.alt = "edited image";
        this.divider = doc.createElement("div");
        this.divider.className = "compare-divider";
        this.range = doc.createElement("input");
        this.range.type = "range";
        this.range.min = "0";
        this.range.max = "1000";
        this.range.value = "500";
        this.range.className = "compare-range";
        this.range.setAttribute("aria-label", "comparison wipe position");
        this.range.addEventListener("input", () => this.apply());
        const frame = doc.createElement("div");
        frame.className = "compare-frame";
        frame.append(this.before, this.after, this.divider);
        this.root.append(frame, this.range);
        this.apply();
    }
    setImages(beforeUrl, afterUrl) {
        this.before.src = beforeUrl;
        this.after.src = afterUrl;
    }
    get wipe() {
        return Number(this.range.value) / 1000;
    }
    setWipe(fraction) {
        const clamped = Math.min(1, Math.max(0, fraction));
        this.range.value = String(Math.round(clamped * 1000));
        this.apply();
    }
    apply() {
        const percent = this.wipe * 100;
        this.after.style.clipPath = `inset(0 ${100 - percent}% 0 0)`;
        this.divider.style.left = `${percent}%`;
    }
}
