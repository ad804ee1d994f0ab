package shop;

public class Inventory {
    private int stock;

    /**
     * Adds the given quantity to the stock on hand.
     */
    public void restock(int quantity) {
        stock += quantity;
    }

    /**
     * Returns how many units are on hand.
     */
    public int available() {
        return stock;
    }
}
