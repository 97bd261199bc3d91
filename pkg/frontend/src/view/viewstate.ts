export type InteractionMode = 'select' | 'trackball' | 'zoom' | 'slice-drag' | 'cursor-drag';

/** Visibility filter applied per electrode group / line group. */
export type SegmentationMode = 'all' | 'selected-only' | 'none';

export type MappedQuantity = 'V' | 'Jmag';

export interface ColorScaling {
  min: number;
  max: number;
}

/** Client-side scene state; everything else is fetched from the service. */
export class ViewState {
  mode: InteractionMode = 'trackball';
  electrodeSegmentation: SegmentationMode = 'all';
  lineSegmentation: SegmentationMode = 'all';
  selectedElectrode: number | null = null;
  colormap = 'jet';
  lineQuantity: MappedQuantity = 'Jmag';
  sliceQuantity: MappedQuantity = 'V';
  /** null means auto-scale from the fetched data range. */
  userScaling: ColorScaling | null = null;
  fogStartFactor = 1;
  fogStopFactor = 1;

  setMode(mode: InteractionMode): void {
    this.mode = mode;
  }

  setScaling(scaling: ColorScaling | null): void {
    if (scaling !== null && !(scaling.min < scaling.max)) {
      throw new Error('color scaling requires min < max');
    }
    this.userScaling = scaling;
  }

  selectElectrode(id: number | null): void {
    this.selectedElectrode = id;
  }

  /** Selection is cleared when the selected electrode disappears. */
  onElectrodeDeleted(id: number): void {
    if (this.selectedElectrode === id) {
      this.selectedElectrode = null;
    } else if (this.selectedElectrode !== null && this.selectedElectrode > id) {
      this.selectedElectrode -= 1;
    }
  }

  /** Whether the group for electrode `id` should be drawn. */
  groupVisible(mode: SegmentationMode, id: number): boolean {
    switch (mode) {
      case 'all':
        return true;
      case 'none':
        return false;
      case 'selected-only':
        return this.selectedElectrode === id;
    }
  }
}
