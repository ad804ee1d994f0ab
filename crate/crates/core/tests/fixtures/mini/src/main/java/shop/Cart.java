package shop;

public class Cart {
    private int count;

    /**
     * Adds one item to the cart and returns the new item count.
     */
    public int addItem() {
        count++;
        return count;
    }

    /**
     * Removes every item from the cart.
     */
    public void clear() {
        count = 0;
    }

    public int size() {
        return count;
    }

    /** Package-private helper, never a focal method. */
    int helper() {
        return count * 2;
    }
}
